#include "percolil/analysis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace percolil {

double phi(double t) {
  if (!(t > std::numbers::e)) throw std::domain_error("phi(t) needs t > e");
  return std::sqrt(t * std::log(std::log(t)));
}

// ---------------------------------------------------------------------------
// Checkpoints

std::vector<double> checkpoint_times(WalkKind kind, double q, double t0, double horizon) {
  if (!(q > 1.0)) throw std::invalid_argument("q must be > 1");
  if (!(t0 > std::numbers::e)) throw std::invalid_argument("t0 must be > e");
  const bool discrete = kind != WalkKind::ctsrw;
  if (discrete && !(std::floor(t0) > std::numbers::e))
    throw std::invalid_argument("t0 must be >= 3 for discrete-time walks");
  std::vector<double> times;
  for (int k = 0;; ++k) {
    const double t = t0 * std::pow(q, k);
    if (t > horizon) break;
    times.push_back(discrete ? std::floor(t) : t);
  }
  return times;
}

std::optional<double> CheckpointSeries::runmax_at(double horizon) const {
  const std::size_t expected = checkpoint_times(walk, q, t0, horizon).size();
  if (expected == 0) throw std::invalid_argument("no checkpoint at or below the horizon");
  if (points.size() < expected) {
    if (censored) return std::nullopt;
    throw std::out_of_range("series does not reach the requested horizon");
  }
  return points[expected - 1].runmax;
}

namespace {

Checkpoint make_checkpoint(int k, double t, const Point& position, const Point& start, double prev_max) {
  Checkpoint c;
  c.k = k;
  c.t = t;
  c.position = position;
  c.l1 = l1_norm(position, start);
  c.phi = phi(t);
  c.ratio = static_cast<double>(c.l1) / c.phi;
  c.runmax = std::max(prev_max, c.ratio);
  return c;
}

}  // namespace

CheckpointSeries track_checkpoints(const CoupledTrajectory& traj, WalkKind kind, double q, double t0,
                                   double horizon) {
  CheckpointSeries series{kind, q, t0, {}, false};
  const auto times = checkpoint_times(kind, q, t0, horizon);
  const double covered = kind == WalkKind::ctsrw  ? traj.t_cum.back()
                         : kind == WalkKind::blind ? static_cast<double>(traj.u_cum.back())
                                                   : static_cast<double>(traj.jumps());
  if (horizon > covered) throw std::out_of_range("trajectory does not cover the horizon");
  double running = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t = times[k];
    std::uint64_t p = 0;
    switch (kind) {
      case WalkKind::ctsrw: p = jump_count_at_time(traj, t); break;
      case WalkKind::blind: p = jump_count_at_blind_time(traj, static_cast<std::uint64_t>(t)); break;
      case WalkKind::myopic: p = static_cast<std::uint64_t>(t); break;
    }
    if (traj.censor_jump && p >= *traj.censor_jump) {
      series.censored = true;
      break;
    }
    series.points.push_back(make_checkpoint(static_cast<int>(k), t, traj.z(p), traj.start, running));
    running = series.points.back().runmax;
  }
  return series;
}

CheckpointProbe::CheckpointProbe(WalkKind kind, double q, double t0, double horizon, const Point& start)
    : series_{kind, q, t0, {}, false}, times_(checkpoint_times(kind, q, t0, horizon)), start_(start) {}

void CheckpointProbe::observe(const CoupledWalker::Hold& hold, const Point& position, bool censored) {
  double end = 0.0;
  switch (series_.walk) {
    case WalkKind::ctsrw: end = hold.t_end; break;
    case WalkKind::blind: end = static_cast<double>(hold.u_end); break;
    case WalkKind::myopic: end = static_cast<double>(hold.jump + 1); break;
  }
  while (!done() && times_[next_] < end) {
    if (censored) {
      series_.censored = true;
      return;
    }
    record(position);
  }
}

void CheckpointProbe::record(const Point& position) {
  const double prev = series_.points.empty() ? 0.0 : series_.points.back().runmax;
  series_.points.push_back(make_checkpoint(static_cast<int>(next_), times_[next_], position, start_, prev));
  ++next_;
}

// ---------------------------------------------------------------------------
// Limsup estimate

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile level must be in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

LilEstimate estimate_lil_constant(std::span<const CheckpointSeries> series, double horizon,
                                  std::size_t min_trials) {
  LilEstimate est;
  est.horizon = horizon;
  for (const auto& s : series) {
    if (const auto m = s.runmax_at(horizon)) est.maxima.push_back(*m);
    else ++est.censored;
  }
  est.trials = est.maxima.size();
  const std::size_t total = est.trials + est.censored;
  est.censoring_rate = total > 0 ? static_cast<double>(est.censored) / static_cast<double>(total) : 0.0;
  if (est.trials < min_trials)
    throw std::runtime_error("only " + std::to_string(est.trials) + " uncensored trials; need " +
                             std::to_string(min_trials));
  est.median = quantile(est.maxima, 0.5);
  est.mean = std::accumulate(est.maxima.begin(), est.maxima.end(), 0.0) / static_cast<double>(est.trials);
  est.band_low = quantile(est.maxima, 0.05);
  est.band_high = quantile(est.maxima, 0.95);
  return est;
}

std::vector<IncrementDiagnostic> increment_diagnostics(const CheckpointSeries& series, double gamma,
                                                       double kappa) {
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be > 0");
  if (!(kappa > 1.0)) throw std::invalid_argument("kappa must be > 1");
  std::vector<IncrementDiagnostic> out;
  for (std::size_t k = 1; k < series.points.size(); ++k) {
    const auto& cur = series.points[k];
    const auto& prev = series.points[k - 1];
    IncrementDiagnostic diag;
    diag.k = cur.k;
    diag.t = cur.t;
    diag.increment = cur.position - prev.position;
    diag.increment_l1 = diag.increment.cwiseAbs().sum();
    diag.threshold = gamma * cur.phi;
    diag.exceeds = static_cast<double>(diag.increment_l1) > diag.threshold;
    const auto r = static_cast<double>(cur.l1);
    diag.in_annulus = diag.threshold < r && r < kappa * diag.threshold;
    out.push_back(diag);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Heat kernel

EndpointHistogram& EndpointHistogram::operator+=(const EndpointHistogram& other) {
  if (trials > 0 && other.trials > 0 && other.jumps != jumps)
    throw std::invalid_argument("merging histograms of different jump counts");
  if (trials == 0) jumps = other.jumps;
  trials += other.trials;
  for (const auto& [site, count] : other.hits) hits[site] += count;
  return *this;
}

EndpointHistogram simulate_myopic_endpoints(const ClusterView& cluster, SiteIndex start,
                                            std::uint64_t jumps, std::uint64_t first,
                                            std::uint64_t last, std::uint64_t master_seed) {
  const Lattice& lat = cluster.lattice();
  const BondConfiguration& bonds = cluster.bonds();
  const int dirs = 2 * lat.d();
  EndpointHistogram hist;
  hist.jumps = jumps;
  std::unordered_map<SiteIndex, std::uint64_t> counts;
  for (std::uint64_t trial = first; trial < last; ++trial) {
    CounterStream rng(trial_seed(master_seed, trial));
    WalkCursor cursor(lat, start);
    for (std::uint64_t j = 0; j < jumps; ++j) {
      unsigned mask = 0;
      for (int dir = 0; dir < dirs; ++dir)
        if (bonds.open_toward(cursor.site(), dir, cursor.coord(axis_of(dir)))) mask |= 1U << dir;
      const int degree = std::popcount(mask);
      if (degree == 0) throw std::invalid_argument("myopic walk started on an isolated site");
      for (auto k = uniform_below(rng, static_cast<std::uint64_t>(degree)); k > 0; --k) mask &= mask - 1;
      cursor.move(std::countr_zero(mask));
    }
    ++counts[cursor.site()];
    ++hist.trials;
  }
  hist.hits.insert(counts.begin(), counts.end());
  return hist;
}

std::map<SiteIndex, double> empirical_transition_density(const EndpointHistogram& histogram) {
  if (histogram.trials == 0) throw std::invalid_argument("empty endpoint histogram");
  std::map<SiteIndex, double> out;
  for (const auto& [site, count] : histogram.hits)
    out[site] = static_cast<double>(count) / static_cast<double>(histogram.trials);
  return out;
}

std::vector<FitBin> heat_kernel_bins(const EndpointHistogram& histogram, const ClusterView& cluster,
                                     SiteIndex start, const HeatKernelBinning& binning) {
  if (histogram.trials == 0) throw std::invalid_argument("empty endpoint histogram");
  const Lattice& lat = cluster.lattice();
  const Point origin = lat.point(start);
  const auto t = static_cast<double>(histogram.jumps);
  const double site_radius = binning.site_radius_factor * std::sqrt(t);
  const auto trials = static_cast<double>(histogram.trials);
  auto weight = [&](SiteIndex s) { return binning.per_degree ? cluster.open_degree(s) : 1; };

  auto squared = [&](SiteIndex s) {
    const Point y = lat.point(s);
    double sum = 0.0;
    for (int a = 0; a < lat.d(); ++a) {
      auto delta = y[a] - origin[a];
      if (lat.torus()) {
        const auto side = static_cast<std::int64_t>(lat.side());
        delta = ((delta % side) + side) % side;
        delta = std::min(delta, side - delta);
      }
      sum += static_cast<double>(delta * delta);
    }
    return sum;
  };

  // Site bins and shells are chosen by L1 radius; the abscissa uses the
  // Euclidean |y|^2, averaged over the shell for the outer bins.
  std::vector<FitBin> bins;
  struct Shell {
    std::uint64_t hits = 0;
    double weight = 0.0;
    double weighted_sq = 0.0;
  };
  std::map<std::int64_t, Shell> shells;
  for (SiteIndex s : cluster.sites()) {
    const std::int64_t r = l1_norm(lat, lat.point(s), origin);
    if (static_cast<double>(r) > site_radius) {
      auto& shell = shells[r];
      shell.weight += weight(s);
      shell.weighted_sq += weight(s) * squared(s);
    }
  }
  for (const auto& [site, count] : histogram.hits) {
    const std::int64_t r = l1_norm(lat, lat.point(site), origin);
    if (static_cast<double>(r) <= site_radius) {
      bins.push_back({squared(site) / t, static_cast<double>(count) / trials / weight(site), count});
    } else {
      shells[r].hits += count;
    }
  }
  for (const auto& [r, shell] : shells) {
    if (shell.hits == 0) continue;
    bins.push_back({shell.weighted_sq / shell.weight / t, static_cast<double>(shell.hits) / trials / shell.weight,
                    shell.hits});
  }
  return bins;
}

LinearFit gaussian_fit(std::span<const FitBin> bins, std::uint64_t min_hits) {
  std::vector<double> xs, ys;
  for (const auto& b : bins) {
    if (b.hits < min_hits || !(b.value > 0.0)) continue;
    xs.push_back(b.x);
    ys.push_back(std::log(b.value));
  }
  if (xs.size() < 5) throw std::invalid_argument("gaussian_fit needs >= 5 admissible bins");
  const auto n = static_cast<Eigen::Index>(xs.size());
  return fit_line(Eigen::Map<const Eigen::VectorXd>(xs.data(), n), Eigen::Map<const Eigen::VectorXd>(ys.data(), n));
}

// ---------------------------------------------------------------------------
// Volume growth

LinearFit power_law_fit(std::span<const int> radii, std::span<const double> volumes) {
  if (radii.size() != volumes.size()) throw std::invalid_argument("radii and volumes differ in length");
  if (radii.empty() || std::all_of(radii.begin(), radii.end(), [&](int r) { return r == radii.front(); }))
    throw std::invalid_argument("power-law fit needs at least two distinct radii");
  const auto n = static_cast<Eigen::Index>(radii.size());
  Eigen::VectorXd x(n), y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = radii[static_cast<std::size_t>(i)];
    const auto v = volumes[static_cast<std::size_t>(i)];
    if (r <= 0 || !(v > 0.0)) throw std::invalid_argument("power-law fit needs positive data");
    x[i] = std::log(static_cast<double>(r));
    y[i] = std::log(v);
  }
  return fit_line(x, y);
}

LinearFit volume_growth_fit(std::span<const ClusterView> clusters, int r_min, int r_max) {
  if (r_min < 10) throw std::invalid_argument("volume growth fit needs r_min >= 10");
  if (r_max < r_min) throw std::invalid_argument("r_max < r_min");
  std::vector<int> radii;
  std::vector<double> volumes;
  for (const auto& cluster : clusters) {
    const int usable = std::min(r_max, cluster.lattice().half_width() - 1);
    if (usable < r_min) continue;
    const auto vols = ball_volumes(cluster, cluster.origin(), usable);
    for (int n = r_min; n <= usable; ++n) {
      radii.push_back(n);
      volumes.push_back(static_cast<double>(vols[static_cast<std::size_t>(n)]));
    }
  }
  return power_law_fit(radii, volumes);
}

// ---------------------------------------------------------------------------
// Displacement tails

int max_displacement_until(const ClusterView& cluster, const DistanceField& field, double n,
                           std::uint64_t seed, bool& censored) {
  CoupledWalker walker(cluster, field.source, seed);
  censored = false;
  int best = 0;
  while (true) {
    const auto dist = field.at(walker.site());
    if (!dist) throw std::runtime_error("walk left the BFS field; raise the cap");
    best = std::max(best, *dist);
    if (walker.censor_jump()) censored = true;
    walker.jump();
    if (walker.time() > n) break;
  }
  return best;
}

TailCurve tail_curve(std::span<const int> maxima, double n, std::span<const double> gammas,
                     std::size_t censored) {
  if (!(n > std::numbers::e)) throw std::invalid_argument("tail horizon must exceed e");
  if (gammas.empty()) throw std::invalid_argument("empty gamma grid");
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    if (gammas[i] < 0.0 || (i > 0 && !(gammas[i] > gammas[i - 1])))
      throw std::invalid_argument("gamma grid must be nonnegative and strictly increasing");
  }
  if (maxima.empty()) throw std::runtime_error("no uncensored trials for the tail curve");
  TailCurve curve;
  curve.n = n;
  curve.gammas.assign(gammas.begin(), gammas.end());
  curve.trials = maxima.size();
  curve.censored = censored;
  const double scale = phi(n);
  for (double g : gammas) {
    const auto above = std::count_if(maxima.begin(), maxima.end(),
                                     [&](int m) { return static_cast<double>(m) > g * scale; });
    curve.survival.push_back(static_cast<double>(above) / static_cast<double>(maxima.size()));
  }
  return curve;
}

TailCurve displacement_tail(const ClusterView& cluster, double n, std::span<const double> gammas,
                            std::uint64_t trials, std::uint64_t master_seed) {
  const int cap = static_cast<int>(std::min<std::uint64_t>(cluster.lattice().site_count(),
                                                           std::numeric_limits<int>::max()));
  const DistanceField field = distance_field(cluster.bonds(), cluster.origin(), cap);
  std::vector<int> maxima;
  std::size_t censored = 0;
  for (std::uint64_t i = 0; i < trials; ++i) {
    bool hit = false;
    const int m = max_displacement_until(cluster, field, n, trial_seed(master_seed, i), hit);
    if (hit) ++censored;
    else maxima.push_back(m);
  }
  return tail_curve(maxima, n, gammas, censored);
}

}  // namespace percolil
