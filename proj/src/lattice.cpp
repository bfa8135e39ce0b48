#include "percolil/lattice.hpp"

#include <limits>
#include <stdexcept>

namespace percolil {

std::string_view to_string(Boundary b) {
  return b == Boundary::torus ? "torus" : "free";
}

Boundary parse_boundary(std::string_view text) {
  if (text == "torus") return Boundary::torus;
  if (text == "free") return Boundary::free;
  throw std::invalid_argument("boundary must be 'free' or 'torus', got '" + std::string(text) + "'");
}

std::uint64_t LatticeSpec::site_count() const {
  std::uint64_t n = 1;
  for (int j = 0; j < d; ++j) {
    n *= static_cast<std::uint64_t>(side());
    if (n > std::numeric_limits<std::uint64_t>::max() / 4) break;
  }
  return n;
}

void LatticeSpec::validate() const {
  if (d < 2 || d > kMaxDim)
    throw std::invalid_argument("d must be in [2, " + std::to_string(kMaxDim) + "]");
  if (half_width < 1) throw std::invalid_argument("L must be >= 1");
  if (site_count() >= std::numeric_limits<SiteIndex>::max())
    throw std::invalid_argument("box too large: (2L+1)^d must stay below 2^32");
}

Lattice::Lattice(const LatticeSpec& spec) : spec_(spec), side_(spec.side()) {
  spec_.validate();
  site_count_ = static_cast<SiteIndex>(spec_.site_count());
  SiteIndex s = 1;
  for (int j = spec_.d - 1; j >= 0; --j) {
    stride_[static_cast<std::size_t>(j)] = s;
    s *= static_cast<SiteIndex>(side_);
  }
  origin_ = index(Point::Zero(spec_.d));
}

bool Lattice::contains(const Point& x) const {
  if (x.size() != spec_.d) return false;
  return (x.array().abs() <= spec_.half_width).all();
}

SiteIndex Lattice::index(const Point& x) const {
  if (!contains(x)) throw std::out_of_range("site outside the box");
  SiteIndex s = 0;
  for (int j = 0; j < spec_.d; ++j)
    s += static_cast<SiteIndex>(x[j] + spec_.half_width) * stride(j);
  return s;
}

SiteIndex Lattice::wrap_index(const Point& x) const {
  if (x.size() != spec_.d) throw std::invalid_argument("dimension mismatch");
  SiteIndex s = 0;
  for (int j = 0; j < spec_.d; ++j) {
    std::int64_t c = (x[j] + spec_.half_width) % side_;
    if (c < 0) c += side_;
    s += static_cast<SiteIndex>(c) * stride(j);
  }
  return s;
}

Point Lattice::point(SiteIndex s) const {
  Point x(spec_.d);
  for (int j = 0; j < spec_.d; ++j) x[j] = box_coord(s, j) - spec_.half_width;
  return x;
}

std::optional<SiteIndex> Lattice::neighbor(SiteIndex s, int dir) const {
  return neighbor(s, dir, box_coord(s, axis_of(dir)));
}

}  // namespace percolil
