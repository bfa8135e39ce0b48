#include "percolil/geometry.hpp"

#include <algorithm>
#include <stdexcept>

namespace percolil {

std::int64_t l1_norm(const Lattice& lattice, const Point& x, const Point& y) {
  if (!lattice.torus()) return l1_norm(x, y);
  const std::int64_t side = lattice.side();
  std::int64_t total = 0;
  for (int j = 0; j < lattice.d(); ++j) {
    std::int64_t delta = (x[j] - y[j]) % side;
    if (delta < 0) delta += side;
    total += std::min(delta, side - delta);
  }
  return total;
}

DistanceField distance_field(const BondConfiguration& bonds, SiteIndex source, int cap) {
  if (cap <= 0) throw std::invalid_argument("BFS cap must be positive");
  const Lattice& lat = bonds.lattice();
  if (source >= lat.site_count()) throw std::out_of_range("source outside the box");

  DistanceField field;
  field.source = source;
  field.radius_cap = cap;
  field.dist.assign(lat.site_count(), DistanceField::kUnreached);
  field.dist[source] = 0;
  field.order.push_back(source);
  const int dirs = 2 * lat.d();
  // field.order doubles as the BFS queue.
  for (std::size_t head = 0; head < field.order.size(); ++head) {
    const SiteIndex s = field.order[head];
    const int ds = field.dist[s];
    for (int dir = 0; dir < dirs; ++dir) {
      const int coord = lat.box_coord(s, axis_of(dir));
      if (!bonds.open_toward(s, dir, coord)) continue;
      const SiteIndex t = *lat.neighbor(s, dir, coord);
      if (field.dist[t] != DistanceField::kUnreached) continue;
      if (ds == cap) {
        field.cap_reached = true;
        continue;
      }
      field.dist[t] = ds + 1;
      field.order.push_back(t);
    }
  }
  return field;
}

std::optional<int> chemical_distance(const ClusterView& cluster, SiteIndex x, SiteIndex y, int cap) {
  if (cap <= 0) throw std::invalid_argument("BFS cap must be positive");
  const Lattice& lat = cluster.lattice();
  if (x >= lat.site_count() || y >= lat.site_count()) throw std::out_of_range("site outside the box");
  if (x == y) return 0;
  if (cluster.contains(x) != cluster.contains(y)) return std::nullopt;
  const DistanceField field = distance_field(cluster.bonds(), x, cap);
  return field.at(y);
}

std::vector<std::uint64_t> ball_volumes(const ClusterView& cluster, SiteIndex x, int max_n) {
  if (max_n < 0) throw std::invalid_argument("ball radius must be >= 0");
  if (x >= cluster.lattice().site_count() || !cluster.contains(x))
    throw std::invalid_argument("ball centre is not in the cluster");
  std::vector<std::uint64_t> volumes(static_cast<std::size_t>(max_n) + 1, 0);
  if (max_n == 0) {
    volumes[0] = 1;
    return volumes;
  }
  const DistanceField field = distance_field(cluster.bonds(), x, max_n);
  for (SiteIndex s : field.order) ++volumes[static_cast<std::size_t>(field.dist[s])];
  for (std::size_t n = 1; n < volumes.size(); ++n) volumes[n] += volumes[n - 1];
  return volumes;
}

std::uint64_t ball_volume(const ClusterView& cluster, SiteIndex x, int n) {
  return ball_volumes(cluster, x, n).back();
}

std::vector<SiteIndex> annulus_sites(const ClusterView& cluster, double r_in, double r_out) {
  if (!(r_in >= 0.0 && r_in < r_out)) throw std::invalid_argument("annulus needs 0 <= r_in < r_out");
  const Lattice& lat = cluster.lattice();
  const Point centre = lat.point(cluster.origin());
  std::vector<SiteIndex> out;
  for (SiteIndex z : cluster.sites()) {
    const auto r = static_cast<double>(l1_norm(lat, lat.point(z), centre));
    if (r_in < r && r < r_out) out.push_back(z);
  }
  return out;
}

}  // namespace percolil
