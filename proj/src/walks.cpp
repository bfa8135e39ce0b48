#include "percolil/walks.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace percolil {

std::string_view to_string(WalkKind kind) {
  switch (kind) {
    case WalkKind::ctsrw: return "ctsrw";
    case WalkKind::blind: return "blind";
    case WalkKind::myopic: return "myopic";
  }
  return "?";
}

WalkKind parse_walk_kind(std::string_view text) {
  if (text == "ctsrw") return WalkKind::ctsrw;
  if (text == "blind") return WalkKind::blind;
  if (text == "myopic") return WalkKind::myopic;
  throw std::invalid_argument("walk must be one of ctsrw|blind|myopic, got '" + std::string(text) + "'");
}

namespace {

// Direction of the k-th set bit of mask.
int nth_direction(unsigned mask, std::uint64_t k) {
  for (; k > 0; --k) mask &= mask - 1;
  return std::countr_zero(mask);
}

}  // namespace

SiteIndex step_myopic(const ClusterView& cluster, SiteIndex pos, CounterStream& rng) {
  const unsigned mask = cluster.bonds().open_mask(pos);
  const int degree = std::popcount(mask);
  if (degree == 0) throw std::invalid_argument("myopic step from a site with no open edge");
  const int dir = nth_direction(mask, uniform_below(rng, static_cast<std::uint64_t>(degree)));
  return *cluster.lattice().neighbor(pos, dir);
}

SiteIndex step_blind(const ClusterView& cluster, SiteIndex pos, CounterStream& rng) {
  const int dir = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(2 * cluster.d())));
  if (!cluster.bonds().open_toward(pos, dir)) return pos;
  return *cluster.lattice().neighbor(pos, dir);
}

// ---------------------------------------------------------------------------

WalkCursor::WalkCursor(const Lattice& lattice, SiteIndex start) : lattice_(&lattice), site_(start) {
  if (start >= lattice.site_count()) throw std::out_of_range("start outside the box");
  for (int j = 0; j < lattice.d(); ++j) {
    const auto jj = static_cast<std::size_t>(j);
    box_[jj] = lattice.box_coord(start, j);
    pos_[jj] = box_[jj] - lattice.half_width();
    start_[jj] = pos_[jj];
    if (!lattice.torus() && (box_[jj] == 0 || box_[jj] == lattice.side() - 1)) boundary_hit_ = true;
  }
}

Point WalkCursor::position() const {
  Point x(lattice_->d());
  for (int j = 0; j < lattice_->d(); ++j) x[j] = pos_[static_cast<std::size_t>(j)];
  return x;
}

void WalkCursor::move(int dir) {
  const int axis = axis_of(dir);
  const auto a = static_cast<std::size_t>(axis);
  const int side = lattice_->side();
  site_ = *lattice_->neighbor(site_, dir, box_[a]);
  const int sign = sign_of(dir);
  box_[a] += sign;
  if (box_[a] == side) box_[a] = 0;
  if (box_[a] < 0) box_[a] = side - 1;
  pos_[a] += sign;
  if (lattice_->torus()) {
    if (std::abs(pos_[a] - start_[a]) >= lattice_->half_width()) boundary_hit_ = true;
  } else if (box_[a] == 0 || box_[a] == side - 1) {
    boundary_hit_ = true;
  }
}

// ---------------------------------------------------------------------------

namespace {

unsigned cursor_mask(const BondConfiguration& bonds, const WalkCursor& cursor) {
  unsigned mask = 0;
  const int dirs = 2 * bonds.lattice().d();
  for (int dir = 0; dir < dirs; ++dir)
    if (bonds.open_toward(cursor.site(), dir, cursor.coord(axis_of(dir)))) mask |= 1U << dir;
  return mask;
}

}  // namespace

CoupledWalker::CoupledWalker(const ClusterView& cluster, SiteIndex start, std::uint64_t seed)
    : cluster_(&cluster), rng_(seed), cursor_(cluster.lattice(), start) {
  mask_ = cursor_mask(cluster.bonds(), cursor_);
  degree_ = std::popcount(mask_);
  if (degree_ == 0) throw std::invalid_argument("coupled walk started on an isolated site");
  const int two_d = 2 * cluster.d();
  for (int k = 1; k < two_d; ++k)
    log_failure_[static_cast<std::size_t>(k)] = std::log1p(-static_cast<double>(k) / two_d);
  if (cursor_.boundary_hit()) censor_jump_ = 0;
}

CoupledWalker::Hold CoupledWalker::jump() {
  Hold hold{jumps_, time_, 0.0, blind_time_, 0, degree_};
  const double success = static_cast<double>(degree_) / (2 * cluster_->d());
  time_ += exponential(rng_);
  blind_time_ += geometric_trials(rng_, success, log_failure_[static_cast<std::size_t>(degree_)]);
  const int dir = nth_direction(mask_, uniform_below(rng_, static_cast<std::uint64_t>(degree_)));
  cursor_.move(dir);
  ++jumps_;
  if (!censor_jump_ && cursor_.boundary_hit()) censor_jump_ = jumps_;
  mask_ = cursor_mask(cluster_->bonds(), cursor_);
  degree_ = std::popcount(mask_);
  hold.t_end = time_;
  hold.u_end = blind_time_;
  return hold;
}

namespace {

CoupledTrajectory record(CoupledWalker& walker, const Lattice& lattice, auto&& keep_going) {
  CoupledTrajectory traj;
  traj.start = walker.cursor().position();
  std::vector<std::int64_t> coords;
  auto push = [&] {
    traj.sites.push_back(walker.site());
    for (int j = 0; j < lattice.d(); ++j) coords.push_back(walker.cursor().position(j));
    traj.t_cum.push_back(walker.time());
    traj.u_cum.push_back(walker.blind_time());
  };
  push();
  while (keep_going()) {
    walker.jump();
    push();
  }
  traj.censor_jump = walker.censor_jump();
  traj.path = Eigen::Map<const Path>(coords.data(), lattice.d(),
                                     static_cast<Eigen::Index>(traj.sites.size()));
  return traj;
}

}  // namespace

CoupledTrajectory run_coupled(const ClusterView& cluster, SiteIndex start, std::uint64_t jump_budget,
                              std::uint64_t seed) {
  CoupledWalker walker(cluster, start, seed);
  return record(walker, cluster.lattice(), [&] { return walker.jumps() < jump_budget; });
}

CoupledTrajectory run_coupled_until(const ClusterView& cluster, SiteIndex start, std::uint64_t seed,
                                    double t_horizon, std::uint64_t u_horizon,
                                    std::uint64_t min_jumps) {
  CoupledWalker walker(cluster, start, seed);
  return record(walker, cluster.lattice(), [&] {
    return walker.time() < t_horizon || walker.blind_time() < u_horizon || walker.jumps() < min_jumps;
  });
}

std::uint64_t jump_count_at_time(const CoupledTrajectory& traj, double t) {
  if (!(t >= 0.0)) throw std::out_of_range("time must be >= 0");
  if (t > traj.t_cum.back()) throw std::out_of_range("time beyond the simulated horizon");
  const auto it = std::upper_bound(traj.t_cum.begin(), traj.t_cum.end(), t);
  return static_cast<std::uint64_t>(it - traj.t_cum.begin()) - 1;
}

std::uint64_t jump_count_at_blind_time(const CoupledTrajectory& traj, std::uint64_t n) {
  if (n > traj.u_cum.back()) throw std::out_of_range("blind time beyond the simulated horizon");
  const auto it = std::upper_bound(traj.u_cum.begin(), traj.u_cum.end(), n);
  return static_cast<std::uint64_t>(it - traj.u_cum.begin()) - 1;
}

Point x_at(const CoupledTrajectory& traj, double t) { return traj.z(jump_count_at_time(traj, t)); }

Point y_at(const CoupledTrajectory& traj, std::uint64_t n) {
  return traj.z(jump_count_at_blind_time(traj, n));
}

Path run_blind_direct(const ClusterView& cluster, SiteIndex start, std::uint64_t n_steps,
                      std::uint64_t seed) {
  const Lattice& lat = cluster.lattice();
  const int d = lat.d();
  CounterStream rng(seed);
  WalkCursor cursor(lat, start);
  Path path(d, static_cast<Eigen::Index>(n_steps) + 1);
  path.col(0) = cursor.position();
  for (std::uint64_t n = 1; n <= n_steps; ++n) {
    const int dir = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(2 * d)));
    if (cluster.bonds().open_toward(cursor.site(), dir, cursor.coord(axis_of(dir)))) cursor.move(dir);
    path.col(static_cast<Eigen::Index>(n)) = cursor.position();
  }
  return path;
}

int max_chemical_displacement(const CoupledTrajectory& traj, const DistanceField& field,
                              std::uint64_t horizon) {
  if (horizon > traj.jumps()) throw std::out_of_range("horizon beyond the simulated jumps");
  if (traj.sites.front() != field.source)
    throw std::invalid_argument("distance field is not rooted at the trajectory start");
  int best = 0;
  for (std::uint64_t p = 0; p <= horizon; ++p) {
    const auto dist = field.at(traj.sites[p]);
    if (!dist) throw std::runtime_error("visited site lies beyond the BFS cap; raise the cap");
    best = std::max(best, *dist);
  }
  return best;
}

int max_chemical_displacement(const CoupledTrajectory& traj, const ClusterView& cluster,
                              std::uint64_t horizon, int cap) {
  return max_chemical_displacement(traj, distance_field(cluster.bonds(), traj.sites.front(), cap),
                                   horizon);
}

}  // namespace percolil
