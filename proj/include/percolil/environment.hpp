// The environment seen from the walker, summarised by the open degree at the
// walker's site, and exact dense-matrix oracles for walks on small clusters.
#ifndef PERCOLIL_ENVIRONMENT_HPP
#define PERCOLIL_ENVIRONMENT_HPP

#include "percolil/percolation.hpp"
#include "percolil/walks.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace percolil {

/// Open-degree histograms along a blind walk.
///
/// `degree_counts` tallies the degree I(j) of the site left at each jump
/// epoch of the blind walk; its frequencies i_hat(k) are what the time-scale
/// constant is built from. `time_counts` tallies the degree at every blind
/// time step 1..n, whose frequencies converge to the degree law of a
/// uniformly chosen cluster site (the stationary law of the blind walk).
struct EnvironmentStats {
  int d = 2;
  std::vector<std::uint64_t> degree_counts;
  std::vector<std::uint64_t> time_counts;
  std::uint64_t total_steps = 0;
  std::uint64_t total_time = 0;

  explicit EnvironmentStats(int dim = 2)
      : d(dim), degree_counts(static_cast<std::size_t>(2 * dim + 1), 0),
        time_counts(static_cast<std::size_t>(2 * dim + 1), 0) {}

  double i_hat(int k) const;
  double i_time(int k) const;
  /// Record one holding interval [u_begin, u_end) of a site with the given
  /// degree, restricted to blind times 1..horizon.
  void add_hold(int degree, std::uint64_t u_begin, std::uint64_t u_end, std::uint64_t horizon);

  EnvironmentStats& operator+=(const EnvironmentStats& other);
  friend bool operator==(const EnvironmentStats&, const EnvironmentStats&) = default;
};

/// Stats of the blind walk Y_1..Y_n reconstructed from the coupling.
/// Throws std::out_of_range if n exceeds U_P.
EnvironmentStats collect_environment_stats(const ClusterView& cluster, const CoupledTrajectory& traj,
                                           std::uint64_t n_steps);
/// Stats of a directly simulated blind path Y_0..Y_n.
EnvironmentStats collect_environment_stats(const ClusterView& cluster, const Path& blind_path);

/// 1 / sum_{k=1}^{2d} i_hat(k) * 2d / k. Throws std::domain_error if a
/// degree-0 site was recorded or nothing was recorded.
double alpha_from_ik(const EnvironmentStats& stats);

/// P / U_P. Throws std::invalid_argument below 1000 jumps.
double alpha_direct(const CoupledTrajectory& traj);

/// Dense one-step and generator matrices of the walks on a small cluster.
struct FiniteChainOracle {
  int d = 2;
  std::vector<SiteIndex> sites;   // sorted box indices
  Eigen::VectorXi degree;
  Eigen::MatrixXd blind;          // P[x][y] = 1/2d per open edge, 1 - n_x/2d on the diagonal
  Eigen::MatrixXd generator;      // Q[x][y] = 1/n_x per open edge, -1 on the diagonal

  Eigen::Index position(SiteIndex s) const;
};

inline constexpr std::size_t kOracleSiteCap = 400;

/// Throws std::invalid_argument if the cluster has more than `cap` sites.
FiniteChainOracle build_finite_oracle(const ClusterView& cluster, std::size_t cap = kOracleSiteCap);

/// One-step matrix of the myopic chain (uniform over open edges).
Eigen::MatrixXd myopic_matrix(const FiniteChainOracle& oracle);

/// exp(t Q) for a generator Q by uniformization: with lambda = max_x |Q_xx|
/// and P = I + Q / lambda, exp(tQ) = sum_k Poisson(k; lambda t) P^k, cut
/// once the remaining Poisson mass drops below `tol`. Large lambda t is
/// split into 2^s equal pieces whose results are squared back together.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> uniformized_exp(
    const Eigen::MatrixBase<Derived>& generator, typename Derived::Scalar t,
    typename Derived::Scalar tol = typename Derived::Scalar(1e-12)) {
  using Scalar = typename Derived::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (generator.rows() != generator.cols()) throw std::invalid_argument("generator must be square");
  if (!(t >= Scalar(0))) throw std::invalid_argument("time must be >= 0");
  const Eigen::Index n = generator.rows();
  const Scalar lambda = generator.diagonal().cwiseAbs().maxCoeff();
  if (lambda == Scalar(0) || t == Scalar(0)) return Matrix::Identity(n, n);

  int squarings = 0;
  Scalar rate = lambda * t;
  while (rate > Scalar(8)) {
    rate /= Scalar(2);
    ++squarings;
  }
  const Scalar piece_tol = tol / std::ldexp(Scalar(1), squarings);

  const Matrix step = Matrix::Identity(n, n) + generator / lambda;
  Scalar weight = std::exp(-rate);
  Scalar mass = weight;
  Matrix power = Matrix::Identity(n, n);
  Matrix result = weight * power;
  for (int k = 1; Scalar(1) - mass > piece_tol && k < 10000; ++k) {
    power = power * step;
    weight *= rate / Scalar(k);
    mass += weight;
    result.noalias() += weight * power;
  }
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result;
}

/// p_t(x, y) of the continuous-time walk, rows and columns in oracle order.
Eigen::MatrixXd exact_heat_kernel(const FiniteChainOracle& oracle, double t);

struct StationarityReport {
  double max_column_deviation = 0.0;   // max_y |sum_x P[x][y] - 1|
  double max_row_deviation = 0.0;      // max_x |sum_y P[x][y] - 1|
  double max_asymmetry = 0.0;          // max |P - P^T|
  double uniform_fixed_point_deviation = 0.0;  // max |u P - u|, u uniform
};

template <typename Derived>
StationarityReport stationarity_check(const Eigen::MatrixBase<Derived>& transition) {
  StationarityReport report;
  const auto n = transition.rows();
  report.max_column_deviation = (transition.colwise().sum().array() - 1.0).abs().maxCoeff();
  report.max_row_deviation = (transition.rowwise().sum().array() - 1.0).abs().maxCoeff();
  report.max_asymmetry = (transition - transition.transpose()).cwiseAbs().maxCoeff();
  const Eigen::RowVectorXd uniform = Eigen::RowVectorXd::Constant(n, 1.0 / static_cast<double>(n));
  report.uniform_fixed_point_deviation = (uniform * transition - uniform).cwiseAbs().maxCoeff();
  return report;
}

StationarityReport stationarity_check(const FiniteChainOracle& oracle);

}  // namespace percolil

#endif  // PERCOLIL_ENVIRONMENT_HPP
