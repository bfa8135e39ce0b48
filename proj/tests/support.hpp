// Helpers shared by the unit tests: hand-built configurations and
// brute-force reference implementations written without the library's
// fast paths.
#ifndef PERCOLIL_TESTS_SUPPORT_HPP
#define PERCOLIL_TESTS_SUPPORT_HPP

#include "percolil/percolation.hpp"

#include <cmath>
#include <initializer_list>
#include <memory>
#include <utility>
#include <vector>

namespace testing {

using namespace percolil;

inline Point pt(std::initializer_list<std::int64_t> coords) {
  Point x(static_cast<Eigen::Index>(coords.size()));
  Eigen::Index i = 0;
  for (auto c : coords) x[i++] = c;
  return x;
}

inline LatticeSpec box(int d, int L, Boundary b = Boundary::free) { return LatticeSpec{d, L, b}; }

struct Edge {
  Point from;
  int axis;
};

inline std::shared_ptr<BondConfiguration> from_edges(const LatticeSpec& spec, const std::vector<Edge>& edges) {
  auto bonds = std::make_shared<BondConfiguration>(spec);
  for (const auto& e : edges) bonds->set_open(e.from, e.axis);
  return bonds;
}

/// All edges open.
inline std::shared_ptr<BondConfiguration> full(const LatticeSpec& spec) {
  return std::make_shared<BondConfiguration>(generate_bonds(spec, 1.0, 0));
}

/// Horizontal path of `n` sites starting at the origin along axis 0.
inline std::shared_ptr<BondConfiguration> path_cluster(int n, int L = 4) {
  std::vector<Edge> edges;
  for (int i = 0; i + 1 < n; ++i) edges.push_back({pt({i, 0}), 0});
  return from_edges(box(2, L), edges);
}

/// Explicit neighbour lists, built site by site from raw edge bits.
inline std::vector<std::vector<SiteIndex>> adjacency(const BondConfiguration& bonds) {
  const Lattice& lat = bonds.lattice();
  std::vector<std::vector<SiteIndex>> adj(lat.site_count());
  for (SiteIndex s = 0; s < lat.site_count(); ++s) {
    const Point x = lat.point(s);
    for (int axis = 0; axis < lat.d(); ++axis) {
      if (!bonds.is_open(s, axis)) continue;
      Point y = x;
      y[axis] += 1;
      if (y[axis] > lat.half_width()) y[axis] = -lat.half_width();
      const SiteIndex t = lat.index(y);
      adj[s].push_back(t);
      adj[t].push_back(s);
    }
  }
  return adj;
}

/// Recursive-free DFS labeling: smallest member index per site.
inline std::vector<SiteIndex> dfs_labels(const BondConfiguration& bonds) {
  const auto adj = adjacency(bonds);
  const auto n = adj.size();
  std::vector<SiteIndex> label(n, static_cast<SiteIndex>(-1));
  for (SiteIndex s = 0; s < n; ++s) {
    if (label[s] != static_cast<SiteIndex>(-1)) continue;
    std::vector<SiteIndex> stack{s};
    label[s] = s;
    while (!stack.empty()) {
      const SiteIndex u = stack.back();
      stack.pop_back();
      for (SiteIndex v : adj[u]) {
        if (label[v] == static_cast<SiteIndex>(-1)) {
          label[v] = s;
          stack.push_back(v);
        }
      }
    }
  }
  return label;
}

/// Origin in the largest cluster, ties broken towards the smallest label.
inline bool dfs_origin_in_largest(const BondConfiguration& bonds) {
  const auto label = dfs_labels(bonds);
  std::vector<std::size_t> size(label.size(), 0);
  for (SiteIndex l : label) ++size[l];
  SiteIndex best = 0;
  for (SiteIndex l = 0; l < size.size(); ++l)
    if (size[l] > size[best]) best = l;
  return label[bonds.lattice().origin()] == best;
}

/// |observed - expected| <= k sigma for a binomial proportion.
inline bool within_binomial(double observed, double prob, double count, double k) {
  const double sigma = std::sqrt(prob * (1.0 - prob) / count);
  return std::abs(observed - prob) <= k * sigma + 1e-12;
}

}  // namespace testing

#endif
