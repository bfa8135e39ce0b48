#include "percolil/environment.hpp"

#include <algorithm>
#include <stdexcept>

namespace percolil {

double EnvironmentStats::i_hat(int k) const {
  if (total_steps == 0) return 0.0;
  return static_cast<double>(degree_counts.at(static_cast<std::size_t>(k))) / static_cast<double>(total_steps);
}

double EnvironmentStats::i_time(int k) const {
  if (total_time == 0) return 0.0;
  return static_cast<double>(time_counts.at(static_cast<std::size_t>(k))) / static_cast<double>(total_time);
}

void EnvironmentStats::add_hold(int degree, std::uint64_t u_begin, std::uint64_t u_end,
                                std::uint64_t horizon) {
  const auto k = static_cast<std::size_t>(degree);
  if (u_begin < horizon) {
    ++degree_counts[k];
    ++total_steps;
  }
  const std::uint64_t lo = std::max<std::uint64_t>(u_begin, 1);
  const std::uint64_t hi = std::min<std::uint64_t>(u_end - 1, horizon);
  if (u_end > 0 && hi >= lo) {
    time_counts[k] += hi - lo + 1;
    total_time += hi - lo + 1;
  }
}

EnvironmentStats& EnvironmentStats::operator+=(const EnvironmentStats& other) {
  if (other.d != d) throw std::invalid_argument("merging stats of different dimensions");
  for (std::size_t k = 0; k < degree_counts.size(); ++k) {
    degree_counts[k] += other.degree_counts[k];
    time_counts[k] += other.time_counts[k];
  }
  total_steps += other.total_steps;
  total_time += other.total_time;
  return *this;
}

EnvironmentStats collect_environment_stats(const ClusterView& cluster, const CoupledTrajectory& traj,
                                           std::uint64_t n_steps) {
  if (n_steps > traj.u_cum.back()) throw std::out_of_range("blind horizon beyond the trajectory");
  EnvironmentStats stats(cluster.d());
  const std::uint64_t last = traj.jumps();
  for (std::uint64_t p = 0; p <= last && traj.u_cum[p] <= n_steps; ++p) {
    const std::uint64_t u_end = p < last ? traj.u_cum[p + 1] : n_steps + 1;
    stats.add_hold(cluster.open_degree(traj.sites[p]), traj.u_cum[p], u_end, n_steps);
  }
  return stats;
}

EnvironmentStats collect_environment_stats(const ClusterView& cluster, const Path& blind_path) {
  const Lattice& lat = cluster.lattice();
  EnvironmentStats stats(cluster.d());
  const auto n = static_cast<std::uint64_t>(blind_path.cols()) - 1;
  std::uint64_t hold_begin = 0;
  for (std::uint64_t j = 1; j <= n + 1; ++j) {
    const bool moved = j <= n && blind_path.col(static_cast<Eigen::Index>(j)) !=
                                     blind_path.col(static_cast<Eigen::Index>(j - 1));
    if (j <= n && !moved) continue;
    const Point here = blind_path.col(static_cast<Eigen::Index>(j - 1));
    stats.add_hold(cluster.open_degree(lat.wrap_index(here)), hold_begin, j, n);
    hold_begin = j;
  }
  return stats;
}

double alpha_from_ik(const EnvironmentStats& stats) {
  if (stats.total_steps == 0) throw std::domain_error("no environment samples");
  if (stats.degree_counts[0] > 0)
    throw std::domain_error("walker recorded on an isolated site");
  const double two_d = 2.0 * stats.d;
  double inverse = 0.0;
  for (int k = 1; k <= 2 * stats.d; ++k) inverse += stats.i_hat(k) * two_d / k;
  return 1.0 / inverse;
}

double alpha_direct(const CoupledTrajectory& traj) {
  if (traj.jumps() < 1000) throw std::invalid_argument("alpha_direct needs at least 1000 jumps");
  return static_cast<double>(traj.jumps()) / static_cast<double>(traj.u_cum.back());
}

// ---------------------------------------------------------------------------

Eigen::Index FiniteChainOracle::position(SiteIndex s) const {
  const auto it = std::lower_bound(sites.begin(), sites.end(), s);
  if (it == sites.end() || *it != s) throw std::out_of_range("site not in the oracle cluster");
  return static_cast<Eigen::Index>(it - sites.begin());
}

FiniteChainOracle build_finite_oracle(const ClusterView& cluster, std::size_t cap) {
  if (cluster.size() > cap)
    throw std::invalid_argument("cluster has " + std::to_string(cluster.size()) +
                                " sites, above the oracle cap of " + std::to_string(cap));
  FiniteChainOracle oracle;
  oracle.d = cluster.d();
  oracle.sites = cluster.sites();
  const auto n = static_cast<Eigen::Index>(oracle.sites.size());
  const double two_d = 2.0 * oracle.d;
  const Lattice& lat = cluster.lattice();
  oracle.degree.resize(n);
  oracle.blind = Eigen::MatrixXd::Zero(n, n);
  oracle.generator = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const SiteIndex s = oracle.sites[static_cast<std::size_t>(i)];
    const int deg = cluster.open_degree(s);
    oracle.degree[i] = deg;
    oracle.blind(i, i) = 1.0 - deg / two_d;
    if (deg == 0) continue;
    oracle.generator(i, i) = -1.0;
    for (int dir = 0; dir < 2 * oracle.d; ++dir) {
      if (!cluster.bonds().open_toward(s, dir)) continue;
      const Eigen::Index j = oracle.position(*lat.neighbor(s, dir));
      oracle.blind(i, j) += 1.0 / two_d;
      oracle.generator(i, j) += 1.0 / deg;
    }
  }
  return oracle;
}

Eigen::MatrixXd myopic_matrix(const FiniteChainOracle& oracle) {
  // Q = M - I for the mean-one holding walk, so M = Q + I.
  Eigen::MatrixXd m = oracle.generator;
  m.diagonal().array() += 1.0;
  return m;
}

Eigen::MatrixXd exact_heat_kernel(const FiniteChainOracle& oracle, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("time must be >= 0");
  return uniformized_exp(oracle.generator, t);
}

StationarityReport stationarity_check(const FiniteChainOracle& oracle) {
  return stationarity_check(oracle.blind);
}

}  // namespace percolil
