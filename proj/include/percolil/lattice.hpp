// Finite boxes [-L, L]^d of Z^d and their row-major site indexing.
#ifndef PERCOLIL_LATTICE_HPP
#define PERCOLIL_LATTICE_HPP

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace percolil {

inline constexpr int kMaxDim = 8;

/// A point of Z^d. Fixed maximum size, so no heap allocation.
template <typename Scalar>
using PointT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1, Eigen::AutoAlign, kMaxDim, 1>;
using Point = PointT<std::int64_t>;

using SiteIndex = std::uint32_t;

enum class Boundary : std::uint8_t { free = 0, torus = 1 };

std::string_view to_string(Boundary b);
Boundary parse_boundary(std::string_view text);

struct LatticeSpec {
  int d = 2;
  int half_width = 1;  // L
  Boundary boundary = Boundary::torus;

  int side() const { return 2 * half_width + 1; }
  std::uint64_t site_count() const;
  /// Throws std::invalid_argument unless d in [2, kMaxDim], L >= 1 and the
  /// site count fits a SiteIndex.
  void validate() const;

  friend bool operator==(const LatticeSpec&, const LatticeSpec&) = default;
};

/// Direction code in [0, 2d): axis = dir / 2, dir even is +e_axis, odd is -e_axis.
constexpr int axis_of(int dir) { return dir >> 1; }
constexpr int sign_of(int dir) { return (dir & 1) ? -1 : 1; }

/// Index arithmetic for a validated LatticeSpec. Coordinate 0 is the most
/// significant in the row-major order.
class Lattice {
 public:
  explicit Lattice(const LatticeSpec& spec);

  const LatticeSpec& spec() const { return spec_; }
  int d() const { return spec_.d; }
  int half_width() const { return spec_.half_width; }
  int side() const { return side_; }
  SiteIndex site_count() const { return site_count_; }
  bool torus() const { return spec_.boundary == Boundary::torus; }
  SiteIndex stride(int axis) const { return stride_[static_cast<std::size_t>(axis)]; }

  SiteIndex origin() const { return origin_; }
  bool contains(const Point& x) const;
  /// Throws std::out_of_range for points outside the box.
  SiteIndex index(const Point& x) const;
  /// Index of the box site congruent to x modulo side (torus identification).
  SiteIndex wrap_index(const Point& x) const;
  Point point(SiteIndex s) const;
  /// Coordinate along `axis` shifted to [0, side).
  int box_coord(SiteIndex s, int axis) const {
    return static_cast<int>((s / stride(axis)) % static_cast<SiteIndex>(side_));
  }

  /// Neighbour in direction `dir`, or nullopt across a free face.
  std::optional<SiteIndex> neighbor(SiteIndex s, int dir) const;
  /// Same, with the box coordinate along axis_of(dir) supplied by the caller.
  std::optional<SiteIndex> neighbor(SiteIndex s, int dir, int coord) const {
    const int axis = axis_of(dir);
    const SiteIndex st = stride(axis);
    if (sign_of(dir) > 0) {
      if (coord + 1 < side_) return s + st;
      if (!torus()) return std::nullopt;
      return s - static_cast<SiteIndex>(side_ - 1) * st;
    }
    if (coord > 0) return s - st;
    if (!torus()) return std::nullopt;
    return s + static_cast<SiteIndex>(side_ - 1) * st;
  }

 private:
  LatticeSpec spec_;
  int side_;
  SiteIndex site_count_;
  SiteIndex origin_;
  std::array<SiteIndex, kMaxDim> stride_{};
};

}  // namespace percolil

#endif  // PERCOLIL_LATTICE_HPP
