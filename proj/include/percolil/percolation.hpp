// Bernoulli bond percolation on a finite box: generation, cluster labeling,
// conditioning on the origin lying in the largest cluster, environment
// shifts and the binary bond file format.
#ifndef PERCOLIL_PERCOLATION_HPP
#define PERCOLIL_PERCOLATION_HPP

#include "percolil/lattice.hpp"
#include "percolil/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

namespace percolil {

/// Open/closed state of every nearest-neighbour edge of a box, one bit
/// plane per axis. Bit `s` of plane `j` is the edge (s, s + e_j); on a free
/// boundary the bits on the upper face stay clear.
class BondConfiguration {
 public:
  /// All edges closed.
  explicit BondConfiguration(const LatticeSpec& spec, double p = 1.0, std::uint64_t seed = 0);

  const Lattice& lattice() const { return lattice_; }
  const LatticeSpec& spec() const { return lattice_.spec(); }
  double p() const { return p_; }
  std::uint64_t seed() const { return seed_; }

  /// Whether the edge (s, s + e_axis) exists in the box at all.
  bool has_edge(SiteIndex s, int axis) const {
    return lattice_.torus() || lattice_.box_coord(s, axis) + 1 < lattice_.side();
  }
  bool is_open(SiteIndex s, int axis) const {
    const auto& plane = planes_[static_cast<std::size_t>(axis)];
    return (plane[s >> 6] >> (s & 63)) & 1U;
  }
  void set_open(SiteIndex s, int axis, bool open = true);
  void set_open(const Point& x, int axis, bool open = true) { set_open(lattice_.index(x), axis, open); }

  /// Is the edge from s in direction `dir` open? `coord` is the box
  /// coordinate of s along axis_of(dir).
  bool open_toward(SiteIndex s, int dir, int coord) const {
    const int axis = axis_of(dir);
    const int side = lattice_.side();
    if (sign_of(dir) > 0) {
      if (coord + 1 < side || lattice_.torus()) return is_open(s, axis);
      return false;
    }
    const SiteIndex st = lattice_.stride(axis);
    if (coord > 0) return is_open(s - st, axis);
    if (!lattice_.torus()) return false;
    return is_open(s + static_cast<SiteIndex>(side - 1) * st, axis);
  }
  bool open_toward(SiteIndex s, int dir) const {
    return open_toward(s, dir, lattice_.box_coord(s, axis_of(dir)));
  }

  /// Bit k set iff direction k is open from s.
  unsigned open_mask(SiteIndex s) const;
  int open_degree(SiteIndex s) const;

  std::uint64_t edge_count() const;
  std::uint64_t open_edge_count() const;

  std::span<const std::uint64_t> plane(int axis) const {
    return planes_[static_cast<std::size_t>(axis)];
  }
  std::span<std::uint64_t> plane(int axis) { return planes_[static_cast<std::size_t>(axis)]; }

  friend bool operator==(const BondConfiguration& a, const BondConfiguration& b);

 private:
  Lattice lattice_;
  double p_;
  std::uint64_t seed_;
  std::vector<std::vector<std::uint64_t>> planes_;
};

/// The uniform variate that decides edge (s, s + e_axis) for `seed`. The
/// edge is open at parameter p iff this is < p, which couples all p.
double edge_uniform(std::uint64_t seed, SiteIndex site_count, int axis, SiteIndex s);

BondConfiguration generate_bonds(const LatticeSpec& spec, double p, std::uint64_t seed);

/// Count of open edges incident to x. Throws std::out_of_range outside the box.
int open_degree(const BondConfiguration& bonds, const Point& x);

/// (tau_x omega)_y = omega_{y + x}. Torus only, except for the zero shift.
BondConfiguration shift_environment(const BondConfiguration& bonds, const Point& shift);

/// Full cluster labeling. Each site carries the smallest row-major index of
/// its cluster.
struct ClusterLabeling {
  std::vector<SiteIndex> label;
  std::vector<SiteIndex> size;  // indexed by label; 0 for non-labels

  std::size_t cluster_count() const;
  SiteIndex size_of(SiteIndex lbl) const { return size[lbl]; }
  /// Label of the largest cluster; ties go to the smallest label.
  SiteIndex largest() const;
};

ClusterLabeling label_clusters(const BondConfiguration& bonds);

/// One connected open cluster of a configuration, found by BFS from a seed
/// site which is kept as the distinguished start (the origin when built by
/// sample_conditioned).
class ClusterView {
 public:
  static ClusterView containing(std::shared_ptr<const BondConfiguration> bonds, SiteIndex seed);

  const BondConfiguration& bonds() const { return *bonds_; }
  const std::shared_ptr<const BondConfiguration>& bonds_ptr() const { return bonds_; }
  const Lattice& lattice() const { return bonds_->lattice(); }
  int d() const { return lattice().d(); }

  SiteIndex origin() const { return origin_; }
  /// Canonical cluster id (smallest member index).
  SiteIndex label() const { return label_; }
  std::uint64_t size() const { return size_; }
  bool contains(SiteIndex s) const { return (member_[s >> 6] >> (s & 63)) & 1U; }
  std::vector<SiteIndex> sites() const;
  int open_degree(SiteIndex s) const { return bonds_->open_degree(s); }

 private:
  ClusterView() = default;

  std::shared_ptr<const BondConfiguration> bonds_;
  std::vector<std::uint64_t> member_;
  SiteIndex origin_ = 0;
  SiteIndex label_ = 0;
  std::uint64_t size_ = 0;
};

/// Does the origin's cluster equal the largest cluster of the box?
bool origin_in_largest(const BondConfiguration& bonds);
bool origin_in_largest(const BondConfiguration& bonds, const ClusterView& origin_cluster);

struct ConditionedSample {
  std::shared_ptr<const BondConfiguration> bonds;
  ClusterView cluster;
  int attempts = 0;
};

class SamplingExhausted : public std::runtime_error {
 public:
  SamplingExhausted(int attempts, double acceptance_rate);
  int attempts() const { return attempts_; }
  double acceptance_rate() const { return acceptance_rate_; }

 private:
  int attempts_;
  double acceptance_rate_;
};

/// Seed used for conditioning attempt `attempt` under `master_seed`.
std::uint64_t attempt_seed(std::uint64_t master_seed, int attempt);

/// First configuration (attempts 0, 1, ...) whose origin lies in the largest
/// cluster. Throws SamplingExhausted after max_attempts rejections.
ConditionedSample sample_conditioned(const LatticeSpec& spec, double p, std::uint64_t master_seed,
                                     int max_attempts);

/// Fraction of the first `attempts` conditioning attempts that are accepted.
double acceptance_rate(const LatticeSpec& spec, double p, std::uint64_t master_seed, int attempts);

/// Reference thresholds used only for warnings: 1/2 in d = 2, ~0.2488 in
/// d = 3, NaN otherwise.
double critical_probability(int d);
bool likely_subcritical(int d, double p);

// Binary bond file: "PERC", version 1, then little-endian u8 d, u32 L,
// f64 p, u64 seed, u8 boundary; then d planes of ceil(N/8) bytes, site s at
// bit (s % 8) of byte s / 8.
inline constexpr std::uint8_t kBondFileVersion = 1;

void write_bonds(std::ostream& out, const BondConfiguration& bonds);
BondConfiguration read_bonds(std::istream& in);
void save_bonds(const std::filesystem::path& path, const BondConfiguration& bonds);
BondConfiguration load_bonds(const std::filesystem::path& path);

}  // namespace percolil

#endif  // PERCOLIL_PERCOLATION_HPP
