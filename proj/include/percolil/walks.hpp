// The three coupled walks on a cluster.
//
// The myopic chain Z jumps at every step to a uniformly chosen open
// neighbour. Attaching i.i.d. Exponential(1) holding times gives the
// continuous-time walk X_t = Z_{n(t)}, n(t) = sup{p : T_p <= t}; attaching
// Geometric(n_x / 2d) holding counts gives the blind walk
// Y_n = Z_{m(n)}, m(n) = sup{p : U_p <= n}.
#ifndef PERCOLIL_WALKS_HPP
#define PERCOLIL_WALKS_HPP

#include "percolil/geometry.hpp"
#include "percolil/percolation.hpp"
#include "percolil/rng.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace percolil {

/// X (continuous time), Y (blind) or Z (myopic).
enum class WalkKind { ctsrw, blind, myopic };

std::string_view to_string(WalkKind kind);
WalkKind parse_walk_kind(std::string_view text);

/// Unwrapped positions, one column per time step.
using Path = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Key of trial `trial`'s stream under `master_seed`.
inline std::uint64_t trial_seed(std::uint64_t master_seed, std::uint64_t trial) {
  return derive_key(master_seed, StreamTag::trial, trial);
}

/// Uniform jump among the open edges at pos. Throws std::invalid_argument
/// when pos has no open edge.
SiteIndex step_myopic(const ClusterView& cluster, SiteIndex pos, CounterStream& rng);

/// Uniform direction among all 2d; moves iff that edge is open.
SiteIndex step_blind(const ClusterView& cluster, SiteIndex pos, CounterStream& rng);

/// Position and box bookkeeping shared by all walk drivers.
class WalkCursor {
 public:
  WalkCursor(const Lattice& lattice, SiteIndex start);

  SiteIndex site() const { return site_; }
  int coord(int axis) const { return box_[static_cast<std::size_t>(axis)]; }
  std::int64_t position(int axis) const { return pos_[static_cast<std::size_t>(axis)]; }
  Point position() const;
  bool boundary_hit() const { return boundary_hit_; }

  void move(int dir);

 private:
  const Lattice* lattice_;
  SiteIndex site_;
  std::array<int, kMaxDim> box_{};
  std::array<std::int64_t, kMaxDim> pos_{};
  std::array<std::int64_t, kMaxDim> start_{};
  bool boundary_hit_ = false;
};

/// Streaming simulator of the coupled triple (Z, T, U). Each jump consumes,
/// in order: one exponential draw (T), one geometric draw (U) and one
/// uniform choice among the open directions (Z).
class CoupledWalker {
 public:
  /// Throws std::invalid_argument if start has no open edge.
  CoupledWalker(const ClusterView& cluster, SiteIndex start, std::uint64_t seed);

  /// Holding interval of the current site, filled in by jump().
  struct Hold {
    std::uint64_t jump;       // p
    double t_begin, t_end;    // [T_p, T_{p+1})
    std::uint64_t u_begin, u_end;  // [U_p, U_{p+1})
    int degree;               // open degree of Z_p
  };

  /// Advance Z_p -> Z_{p+1}; returns the holding interval of Z_p.
  Hold jump();

  std::uint64_t jumps() const { return jumps_; }
  double time() const { return time_; }
  std::uint64_t blind_time() const { return blind_time_; }
  const WalkCursor& cursor() const { return cursor_; }
  SiteIndex site() const { return cursor_.site(); }
  int degree() const { return degree_; }
  /// First jump index at which the walk touched the box scale.
  std::optional<std::uint64_t> censor_jump() const { return censor_jump_; }

 private:
  const ClusterView* cluster_;
  CounterStream rng_;
  WalkCursor cursor_;
  std::uint64_t jumps_ = 0;
  double time_ = 0.0;
  std::uint64_t blind_time_ = 0;
  unsigned mask_ = 0;
  int degree_ = 0;
  std::optional<std::uint64_t> censor_jump_;
  std::array<double, 2 * kMaxDim + 1> log_failure_{};
};

/// Stored realisation of the coupled triple.
struct CoupledTrajectory {
  Point start;
  std::vector<SiteIndex> sites;        // Z_0..Z_P as box indices
  Path path;                           // Z_0..Z_P unwrapped, d x (P+1)
  std::vector<double> t_cum;           // T_0 = 0 < T_1 < ...
  std::vector<std::uint64_t> u_cum;    // U_0 = 0 < U_1 < ...
  std::optional<std::uint64_t> censor_jump;

  std::uint64_t jumps() const { return sites.size() - 1; }
  bool boundary_hit() const { return censor_jump.has_value(); }
  Point z(std::uint64_t p) const { return path.col(static_cast<Eigen::Index>(p)); }
};

CoupledTrajectory run_coupled(const ClusterView& cluster, SiteIndex start, std::uint64_t jump_budget,
                              std::uint64_t seed);

/// Runs until T_P >= t_horizon, U_P >= u_horizon and P >= min_jumps.
CoupledTrajectory run_coupled_until(const ClusterView& cluster, SiteIndex start, std::uint64_t seed,
                                    double t_horizon, std::uint64_t u_horizon,
                                    std::uint64_t min_jumps = 0);

/// n(t) = sup{p : T_p <= t}. Throws std::out_of_range for t < 0 or t > T_P.
std::uint64_t jump_count_at_time(const CoupledTrajectory& traj, double t);
/// m(n) = sup{p : U_p <= n}. Throws std::out_of_range for n > U_P.
std::uint64_t jump_count_at_blind_time(const CoupledTrajectory& traj, std::uint64_t n);

/// X_t, unwrapped.
Point x_at(const CoupledTrajectory& traj, double t);
/// Y_n, unwrapped.
Point y_at(const CoupledTrajectory& traj, std::uint64_t n);

/// Blind walk simulated directly with step_blind, outside the coupling.
/// Returns the unwrapped path Y_0..Y_n.
Path run_blind_direct(const ClusterView& cluster, SiteIndex start, std::uint64_t n_steps,
                      std::uint64_t seed);

/// max_{p <= horizon} d(start, Z_p) read from `field` (built from the
/// trajectory start). Throws std::runtime_error if a visited site lies beyond
/// the field's cap.
int max_chemical_displacement(const CoupledTrajectory& traj, const DistanceField& field,
                              std::uint64_t horizon);
int max_chemical_displacement(const CoupledTrajectory& traj, const ClusterView& cluster,
                              std::uint64_t horizon, int cap);

}  // namespace percolil

#endif  // PERCOLIL_WALKS_HPP
