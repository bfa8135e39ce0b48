// LIL statistic, checkpoint tracking, limsup estimation and the fits used
// to check heat-kernel shape, volume growth and displacement tails.
#ifndef PERCOLIL_ANALYSIS_HPP
#define PERCOLIL_ANALYSIS_HPP

#include "percolil/environment.hpp"
#include "percolil/geometry.hpp"
#include "percolil/walks.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace percolil {

/// sqrt(t log log t). Throws std::domain_error unless t > e.
double phi(double t);

struct Checkpoint {
  int k = 0;
  double t = 0.0;          // evaluation time (integer-valued for blind and myopic)
  Point position;          // unwrapped
  std::int64_t l1 = 0;     // |position - start|_1
  double phi = 0.0;
  double ratio = 0.0;
  double runmax = 0.0;
};

/// |W_{t_k}|_1 / phi(t_k) on the grid t_k = t0 q^k for one walk.
struct CheckpointSeries {
  WalkKind walk = WalkKind::ctsrw;
  double q = 2.0;
  double t0 = 16.0;
  std::vector<Checkpoint> points;
  bool censored = false;  // truncated by a boundary hit

  /// Running max at the last checkpoint <= horizon, or nullopt when the
  /// series was censored before reaching it.
  std::optional<double> runmax_at(double horizon) const;
};

/// Evaluation times t0 q^k <= horizon (floored for the discrete walks).
/// Throws std::invalid_argument unless q > 1 and every time exceeds e.
std::vector<double> checkpoint_times(WalkKind kind, double q, double t0, double horizon);

/// Evaluates the chosen walk of a stored trajectory on the checkpoint grid.
/// Throws std::out_of_range if the trajectory does not cover the horizon.
CheckpointSeries track_checkpoints(const CoupledTrajectory& traj, WalkKind kind, double q, double t0,
                                   double horizon);

/// Streaming counterpart of track_checkpoints, fed one holding interval at a
/// time from a CoupledWalker, so long runs need no stored trajectory.
class CheckpointProbe {
 public:
  CheckpointProbe(WalkKind kind, double q, double t0, double horizon, const Point& start);

  /// `position` is the unwrapped site held during `hold`. `censored` marks
  /// holds at or after the first boundary contact.
  void observe(const CoupledWalker::Hold& hold, const Point& position, bool censored);
  bool done() const { return next_ >= times_.size() || series_.censored; }
  const CheckpointSeries& series() const { return series_; }

 private:
  void record(const Point& position);

  CheckpointSeries series_;
  std::vector<double> times_;
  std::size_t next_ = 0;
  Point start_;
};

struct LilEstimate {
  double horizon = 0.0;
  std::vector<double> maxima;   // per uncensored trial
  double median = 0.0;
  double mean = 0.0;
  double band_low = 0.0;        // 5% quantile
  double band_high = 0.0;       // 95% quantile
  std::size_t trials = 0;       // uncensored trials used
  std::size_t censored = 0;
  double censoring_rate = 0.0;
};

/// Linear-interpolation quantile of unsorted data, q in [0, 1].
double quantile(std::vector<double> values, double q);

/// Median of the running maxima at `horizon`. Throws std::runtime_error with
/// fewer than `min_trials` uncensored series.
LilEstimate estimate_lil_constant(std::span<const CheckpointSeries> series, double horizon,
                                  std::size_t min_trials = 30);

struct IncrementDiagnostic {
  int k = 0;
  double t = 0.0;
  Point increment;           // D_k = W_{t_k} - W_{t_{k-1}}
  std::int64_t increment_l1 = 0;
  double threshold = 0.0;    // gamma * phi(t_k)
  bool exceeds = false;      // |D_k| > gamma phi(t_k)
  bool in_annulus = false;   // gamma phi(t_k) < |W_{t_k}| < kappa gamma phi(t_k)
};

/// Throws std::invalid_argument unless gamma > 0 and kappa > 1.
std::vector<IncrementDiagnostic> increment_diagnostics(const CheckpointSeries& series, double gamma,
                                                       double kappa);

/// Endpoint counts of independent myopic walks of a fixed jump count.
struct EndpointHistogram {
  std::uint64_t jumps = 0;
  std::uint64_t trials = 0;
  std::map<SiteIndex, std::uint64_t> hits;

  EndpointHistogram& operator+=(const EndpointHistogram& other);
};

/// Trials [first, last) of myopic walks of `jumps` steps from `start`;
/// trial i uses trial_seed(master_seed, i).
EndpointHistogram simulate_myopic_endpoints(const ClusterView& cluster, SiteIndex start,
                                            std::uint64_t jumps, std::uint64_t first,
                                            std::uint64_t last, std::uint64_t master_seed);

/// Normalised endpoint law p_t(start, y); sums to 1.
std::map<SiteIndex, double> empirical_transition_density(const EndpointHistogram& histogram);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares of y on x.
template <typename DerivedX, typename DerivedY>
LinearFit fit_line(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
  const Eigen::Index n = x.size();
  if (n < 2 || y.size() != n) throw std::invalid_argument("line fit needs >= 2 paired points");
  Eigen::MatrixXd design(n, 2);
  design.col(0).setOnes();
  design.col(1) = x.template cast<double>();
  const Eigen::VectorXd yy = y.template cast<double>();
  const Eigen::Vector2d beta = design.colPivHouseholderQr().solve(yy);
  const Eigen::VectorXd residual = yy - design * beta;
  const double total = (yy.array() - yy.mean()).square().sum();
  LinearFit fit;
  fit.intercept = beta[0];
  fit.slope = beta[1];
  fit.r_squared = total > 0.0 ? 1.0 - residual.squaredNorm() / total : 1.0;
  fit.points = static_cast<std::size_t>(n);
  return fit;
}

/// One heat-kernel bin: x = |y|^2 / t (Euclidean) and the average per-site value.
struct FitBin {
  double x = 0.0;
  double value = 0.0;
  std::uint64_t hits = 0;
};

struct HeatKernelBinning {
  double site_radius_factor = 0.5;  // site-level bins for |y|_1 <= factor * sqrt(t)
  std::uint64_t min_hits = 50;
  bool per_degree = true;           // density relative to the open-degree measure
};

/// Site-level bins for |y|_1 <= factor sqrt(t) and L1 shells beyond,
/// normalised to an average per-site value.
std::vector<FitBin> heat_kernel_bins(const EndpointHistogram& histogram, const ClusterView& cluster,
                                     SiteIndex start, const HeatKernelBinning& binning = {});

/// Least squares of log(value) on x over bins with >= min_hits. Throws
/// std::invalid_argument with fewer than 5 admitted bins.
LinearFit gaussian_fit(std::span<const FitBin> bins, std::uint64_t min_hits = 50);

/// log Vol against log n.
LinearFit power_law_fit(std::span<const int> radii, std::span<const double> volumes);

/// Pooled log-log regression of ball volume around each cluster's origin for
/// radii in [r_min, r_max]; radii >= L (where the ball could feel the box)
/// are dropped. Throws std::invalid_argument for r_min < 10 or fewer than two
/// usable radii.
LinearFit volume_growth_fit(std::span<const ClusterView> clusters, int r_min, int r_max);

/// Largest chemical distance from the start reached by the continuous-time
/// walk up to time n, read from `field`. Sets `censored` on boundary contact.
int max_displacement_until(const ClusterView& cluster, const DistanceField& field, double n,
                           std::uint64_t seed, bool& censored);

struct TailCurve {
  double n = 0.0;
  std::vector<double> gammas;
  std::vector<double> survival;   // P(max d(0, X_s), s <= n, > gamma phi(n))
  std::size_t trials = 0;         // uncensored
  std::size_t censored = 0;
};

/// Empirical survival curve from per-trial maxima. Throws
/// std::invalid_argument unless n > e and gammas are positive increasing
/// (gamma = 0 is allowed as the first entry).
TailCurve tail_curve(std::span<const int> maxima, double n, std::span<const double> gammas,
                     std::size_t censored = 0);

/// Runs `trials` walks from the cluster origin and builds the tail curve.
TailCurve displacement_tail(const ClusterView& cluster, double n, std::span<const double> gammas,
                            std::uint64_t trials, std::uint64_t master_seed);

}  // namespace percolil

#endif  // PERCOLIL_ANALYSIS_HPP
