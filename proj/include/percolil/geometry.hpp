// Chemical (graph) distance, balls and annuli on a cluster.
#ifndef PERCOLIL_GEOMETRY_HPP
#define PERCOLIL_GEOMETRY_HPP

#include "percolil/percolation.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace percolil {

/// Sum_j |x_j - y_j|.
template <typename DerivedA, typename DerivedB>
auto l1_norm(const Eigen::MatrixBase<DerivedA>& x, const Eigen::MatrixBase<DerivedB>& y) {
  return (x - y).cwiseAbs().sum();
}

/// L1 distance in the box metric: coordinate-wise minimal wrap distance on a
/// torus, plain L1 on a free box.
std::int64_t l1_norm(const Lattice& lattice, const Point& x, const Point& y);

/// BFS hop counts from `source` over open edges, out to `radius_cap`.
struct DistanceField {
  static constexpr std::int32_t kUnreached = -1;

  SiteIndex source = 0;
  int radius_cap = 0;
  std::vector<std::int32_t> dist;   // per box site, kUnreached beyond the cap
  std::vector<SiteIndex> order;     // reached sites in nondecreasing distance
  bool cap_reached = false;         // some site sits exactly at the cap with unexplored edges

  std::optional<int> at(SiteIndex s) const {
    const auto v = dist[s];
    return v == kUnreached ? std::nullopt : std::optional<int>(v);
  }
};

/// Throws std::invalid_argument for cap <= 0.
DistanceField distance_field(const BondConfiguration& bonds, SiteIndex source, int cap);

/// Hop count of a shortest open path, or nullopt if none exists within `cap`
/// hops (which covers x and y lying in different clusters).
std::optional<int> chemical_distance(const ClusterView& cluster, SiteIndex x, SiteIndex y, int cap);

/// |B(x, n)|, the number of sites within chemical distance n of x.
/// Throws std::invalid_argument if x is not in the cluster or n < 0.
std::uint64_t ball_volume(const ClusterView& cluster, SiteIndex x, int n);

/// ball_volume(cluster, x, n) for n = 0..max_n from one BFS.
std::vector<std::uint64_t> ball_volumes(const ClusterView& cluster, SiteIndex x, int max_n);

/// Cluster sites z with r_in < |z - origin|_1 < r_out (strict on both sides).
std::vector<SiteIndex> annulus_sites(const ClusterView& cluster, double r_in, double r_out);

}  // namespace percolil

#endif  // PERCOLIL_GEOMETRY_HPP
