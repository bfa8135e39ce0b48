#include "percolil/percolation.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <deque>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>

namespace percolil {

namespace {

std::size_t words_for(SiteIndex n) { return (static_cast<std::size_t>(n) + 63) / 64; }

void check_probability(double p) {
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("p must be in (0, 1]");
}

}  // namespace

BondConfiguration::BondConfiguration(const LatticeSpec& spec, double p, std::uint64_t seed)
    : lattice_(spec), p_(p), seed_(seed) {
  check_probability(p);
  planes_.assign(static_cast<std::size_t>(spec.d),
                 std::vector<std::uint64_t>(words_for(lattice_.site_count()), 0));
}

void BondConfiguration::set_open(SiteIndex s, int axis, bool open) {
  if (s >= lattice_.site_count() || axis < 0 || axis >= lattice_.d())
    throw std::out_of_range("edge outside the box");
  if (!has_edge(s, axis)) throw std::out_of_range("edge leaves the free box");
  auto& word = planes_[static_cast<std::size_t>(axis)][s >> 6];
  const std::uint64_t bit = std::uint64_t{1} << (s & 63);
  word = open ? (word | bit) : (word & ~bit);
}

unsigned BondConfiguration::open_mask(SiteIndex s) const {
  unsigned mask = 0;
  for (int dir = 0; dir < 2 * lattice_.d(); ++dir)
    if (open_toward(s, dir)) mask |= 1U << dir;
  return mask;
}

int BondConfiguration::open_degree(SiteIndex s) const { return std::popcount(open_mask(s)); }

std::uint64_t BondConfiguration::edge_count() const {
  const std::uint64_t n = lattice_.site_count();
  if (lattice_.torus()) return n * static_cast<std::uint64_t>(lattice_.d());
  const auto side = static_cast<std::uint64_t>(lattice_.side());
  return static_cast<std::uint64_t>(lattice_.d()) * (n / side) * (side - 1);
}

std::uint64_t BondConfiguration::open_edge_count() const {
  std::uint64_t total = 0;
  for (const auto& plane : planes_)
    for (auto w : plane) total += static_cast<std::uint64_t>(std::popcount(w));
  return total;
}

bool operator==(const BondConfiguration& a, const BondConfiguration& b) {
  return a.spec() == b.spec() && a.p_ == b.p_ && a.seed_ == b.seed_ && a.planes_ == b.planes_;
}

double edge_uniform(std::uint64_t seed, SiteIndex site_count, int axis, SiteIndex s) {
  const std::uint64_t key = derive_key(seed, StreamTag::edges, 0);
  return bits_to_unit(counter_hash(key, static_cast<std::uint64_t>(axis) * site_count + s));
}

BondConfiguration generate_bonds(const LatticeSpec& spec, double p, std::uint64_t seed) {
  check_probability(p);
  BondConfiguration bonds(spec, p, seed);
  const Lattice& lat = bonds.lattice();
  const SiteIndex n = lat.site_count();
  // Inline counter_hash with the key premixed once.
  const std::uint64_t premixed = splitmix64(derive_key(seed, StreamTag::edges, 0));
  const auto side = static_cast<SiteIndex>(lat.side());
  for (int axis = 0; axis < spec.d; ++axis) {
    auto plane = bonds.plane(axis);
    const std::uint64_t base = static_cast<std::uint64_t>(axis) * n;
    const SiteIndex stride = lat.stride(axis);
    for (std::size_t w = 0; w < plane.size(); ++w) {
      std::uint64_t word = 0;
      const SiteIndex first = static_cast<SiteIndex>(w * 64);
      const SiteIndex last = std::min<SiteIndex>(n, first + 64);
      for (SiteIndex s = first; s < last; ++s) {
        if (!lat.torus() && (s / stride) % side == side - 1) continue;
        const double u = bits_to_unit(splitmix64(premixed + (base + s + 1) * kGoldenGamma));
        if (u < p) word |= std::uint64_t{1} << (s - first);
      }
      plane[w] = word;
    }
  }
  return bonds;
}

int open_degree(const BondConfiguration& bonds, const Point& x) {
  return bonds.open_degree(bonds.lattice().index(x));
}

BondConfiguration shift_environment(const BondConfiguration& bonds, const Point& shift) {
  const Lattice& lat = bonds.lattice();
  if (shift.size() != lat.d()) throw std::invalid_argument("shift dimension mismatch");
  if (shift.isZero()) return bonds;
  if (!lat.torus())
    throw std::invalid_argument("nonzero shift of a free-boundary box leaves the box");
  BondConfiguration out(lat.spec(), bonds.p(), bonds.seed());
  for (SiteIndex y = 0; y < lat.site_count(); ++y) {
    const SiteIndex src = lat.wrap_index(lat.point(y) + shift);
    for (int axis = 0; axis < lat.d(); ++axis)
      if (bonds.is_open(src, axis)) out.set_open(y, axis);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Labeling

namespace {

// Union-find whose roots are always the smallest index in their set.
class MinRootForest {
 public:
  explicit MinRootForest(SiteIndex n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  SiteIndex find(SiteIndex x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(SiteIndex a, SiteIndex b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) parent_[b] = a;
    else parent_[a] = b;
  }

 private:
  std::vector<SiteIndex> parent_;
};

}  // namespace

std::size_t ClusterLabeling::cluster_count() const {
  return static_cast<std::size_t>(std::count_if(size.begin(), size.end(), [](SiteIndex s) { return s > 0; }));
}

SiteIndex ClusterLabeling::largest() const {
  SiteIndex best = 0;
  for (SiteIndex l = 0; l < size.size(); ++l)
    if (size[l] > size[best]) best = l;
  return best;
}

ClusterLabeling label_clusters(const BondConfiguration& bonds) {
  const Lattice& lat = bonds.lattice();
  const SiteIndex n = lat.site_count();
  MinRootForest forest(n);
  for (int axis = 0; axis < lat.d(); ++axis) {
    const auto plane = bonds.plane(axis);
    for (std::size_t w = 0; w < plane.size(); ++w) {
      for (std::uint64_t word = plane[w]; word != 0; word &= word - 1) {
        const auto s = static_cast<SiteIndex>(w * 64 + static_cast<std::size_t>(std::countr_zero(word)));
        forest.unite(s, *lat.neighbor(s, 2 * axis));
      }
    }
  }
  ClusterLabeling out;
  out.label.resize(n);
  out.size.assign(n, 0);
  for (SiteIndex s = 0; s < n; ++s) {
    out.label[s] = forest.find(s);
    ++out.size[out.label[s]];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cluster view

ClusterView ClusterView::containing(std::shared_ptr<const BondConfiguration> bonds, SiteIndex seed) {
  if (!bonds) throw std::invalid_argument("null bond configuration");
  const Lattice& lat = bonds->lattice();
  if (seed >= lat.site_count()) throw std::out_of_range("seed site outside the box");
  ClusterView view;
  view.member_.assign(words_for(lat.site_count()), 0);
  view.origin_ = seed;
  view.label_ = seed;
  auto mark = [&](SiteIndex s) { view.member_[s >> 6] |= std::uint64_t{1} << (s & 63); };

  std::deque<SiteIndex> frontier{seed};
  mark(seed);
  std::uint64_t count = 0;
  const int dirs = 2 * lat.d();
  while (!frontier.empty()) {
    const SiteIndex s = frontier.front();
    frontier.pop_front();
    ++count;
    view.label_ = std::min(view.label_, s);
    std::array<int, kMaxDim> coords{};
    for (int axis = 0; axis < lat.d(); ++axis) coords[static_cast<std::size_t>(axis)] = lat.box_coord(s, axis);
    for (int dir = 0; dir < dirs; ++dir) {
      const int coord = coords[static_cast<std::size_t>(axis_of(dir))];
      if (!bonds->open_toward(s, dir, coord)) continue;
      const SiteIndex t = *lat.neighbor(s, dir, coord);
      if (view.contains(t)) continue;
      mark(t);
      frontier.push_back(t);
    }
  }
  view.size_ = count;
  view.bonds_ = std::move(bonds);
  return view;
}

std::vector<SiteIndex> ClusterView::sites() const {
  std::vector<SiteIndex> out;
  out.reserve(size_);
  for (std::size_t w = 0; w < member_.size(); ++w)
    for (std::uint64_t word = member_[w]; word != 0; word &= word - 1)
      out.push_back(static_cast<SiteIndex>(w * 64 + static_cast<std::size_t>(std::countr_zero(word))));
  return out;
}

// ---------------------------------------------------------------------------
// Conditioning

bool origin_in_largest(const BondConfiguration& bonds, const ClusterView& origin_cluster) {
  const Lattice& lat = bonds.lattice();
  // A cluster holding more than half the box is necessarily the largest.
  if (2 * origin_cluster.size() > lat.site_count()) return true;
  const ClusterLabeling labels = label_clusters(bonds);
  return labels.label[lat.origin()] == labels.largest();
}

bool origin_in_largest(const BondConfiguration& bonds) {
  auto shared = std::make_shared<const BondConfiguration>(bonds);
  const ClusterView view = ClusterView::containing(shared, bonds.lattice().origin());
  return origin_in_largest(bonds, view);
}

SamplingExhausted::SamplingExhausted(int attempts, double acceptance_rate)
    : std::runtime_error("no configuration with the origin in the largest cluster after " +
                         std::to_string(attempts) + " attempts (acceptance rate " +
                         std::to_string(acceptance_rate) +
                         "); p is likely subcritical or L too small"),
      attempts_(attempts),
      acceptance_rate_(acceptance_rate) {}

std::uint64_t attempt_seed(std::uint64_t master_seed, int attempt) {
  return derive_key(master_seed, StreamTag::attempt, static_cast<std::uint64_t>(attempt));
}

ConditionedSample sample_conditioned(const LatticeSpec& spec, double p, std::uint64_t master_seed,
                                     int max_attempts) {
  spec.validate();
  check_probability(p);
  if (max_attempts < 1) throw std::invalid_argument("max_attempts must be >= 1");
  for (int a = 0; a < max_attempts; ++a) {
    auto bonds = std::make_shared<const BondConfiguration>(generate_bonds(spec, p, attempt_seed(master_seed, a)));
    ClusterView view = ClusterView::containing(bonds, bonds->lattice().origin());
    if (origin_in_largest(*bonds, view)) return ConditionedSample{bonds, std::move(view), a + 1};
  }
  throw SamplingExhausted(max_attempts, 0.0);
}

double acceptance_rate(const LatticeSpec& spec, double p, std::uint64_t master_seed, int attempts) {
  if (attempts < 1) throw std::invalid_argument("attempts must be >= 1");
  int accepted = 0;
  for (int a = 0; a < attempts; ++a) {
    if (origin_in_largest(generate_bonds(spec, p, attempt_seed(master_seed, a)))) ++accepted;
  }
  return static_cast<double>(accepted) / attempts;
}

double critical_probability(int d) {
  if (d == 2) return 0.5;
  if (d == 3) return 0.2488;
  return std::numeric_limits<double>::quiet_NaN();
}

bool likely_subcritical(int d, double p) {
  const double pc = critical_probability(d);
  return !std::isnan(pc) && p <= pc;
}

// ---------------------------------------------------------------------------
// Bond files

namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
  std::uint64_t bits = 0;
  static_assert(sizeof(T) <= sizeof(bits));
  std::memcpy(&bits, &value, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T); ++i) out.put(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

template <typename T>
T get_le(std::istream& in) {
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) throw std::runtime_error("truncated bond file");
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  T value;
  std::memcpy(&value, &bits, sizeof(T));
  return value;
}

constexpr char kMagic[4] = {'P', 'E', 'R', 'C'};

}  // namespace

void write_bonds(std::ostream& out, const BondConfiguration& bonds) {
  const LatticeSpec& spec = bonds.spec();
  out.write(kMagic, 4);
  put_le<std::uint8_t>(out, kBondFileVersion);
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(spec.d));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(spec.half_width));
  put_le<double>(out, bonds.p());
  put_le<std::uint64_t>(out, bonds.seed());
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(spec.boundary));
  const std::size_t bytes = (static_cast<std::size_t>(bonds.lattice().site_count()) + 7) / 8;
  for (int axis = 0; axis < spec.d; ++axis) {
    const auto plane = bonds.plane(axis);
    for (std::size_t b = 0; b < bytes; ++b)
      out.put(static_cast<char>((plane[b / 8] >> (8 * (b % 8))) & 0xFF));
  }
  if (!out) throw std::runtime_error("failed to write bond file");
}

BondConfiguration read_bonds(std::istream& in) {
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("not a bond file (bad magic)");
  const auto version = get_le<std::uint8_t>(in);
  if (version != kBondFileVersion)
    throw std::runtime_error("unsupported bond file version " + std::to_string(version));
  LatticeSpec spec;
  spec.d = get_le<std::uint8_t>(in);
  const auto half_width = get_le<std::uint32_t>(in);
  if (half_width > static_cast<std::uint32_t>(std::numeric_limits<int>::max()))
    throw std::runtime_error("bond file: L out of range");
  spec.half_width = static_cast<int>(half_width);
  const auto p = get_le<double>(in);
  const auto seed = get_le<std::uint64_t>(in);
  const auto boundary = get_le<std::uint8_t>(in);
  if (boundary > 1) throw std::runtime_error("bond file: bad boundary flag");
  spec.boundary = static_cast<Boundary>(boundary);
  try {
    spec.validate();
    check_probability(p);
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("bond file: ") + e.what());
  }

  BondConfiguration bonds(spec, p, seed);
  const SiteIndex n = bonds.lattice().site_count();
  const std::size_t bytes = (static_cast<std::size_t>(n) + 7) / 8;
  for (int axis = 0; axis < spec.d; ++axis) {
    auto plane = bonds.plane(axis);
    for (std::size_t b = 0; b < bytes; ++b) {
      const int c = in.get();
      if (c == std::char_traits<char>::eof()) throw std::runtime_error("truncated bond file");
      plane[b / 8] |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * (b % 8));
    }
    // Padding bits and bits for edges that leave a free box must be clear.
    if (n % 64 != 0 && (plane.back() >> (n % 64)) != 0)
      throw std::runtime_error("bond file: nonzero padding bits");
    if (!bonds.lattice().torus()) {
      for (SiteIndex s = 0; s < n; ++s)
        if (bonds.is_open(s, axis) && !bonds.has_edge(s, axis))
          throw std::runtime_error("bond file: open edge leaves the free box");
    }
  }
  return bonds;
}

void save_bonds(const std::filesystem::path& path, const BondConfiguration& bonds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_bonds(out, bonds);
}

BondConfiguration load_bonds(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_bonds(in);
}

}  // namespace percolil
