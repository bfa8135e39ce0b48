#include "support.hpp"

#include "percolil/environment.hpp"
#include "percolil/geometry.hpp"
#include "percolil/walks.hpp"

#include <doctest.h>

#include <map>

using namespace testing;

namespace {

ClusterView view_of(std::shared_ptr<const BondConfiguration> bonds, const Point& at) {
  const SiteIndex s = bonds->lattice().index(at);
  return ClusterView::containing(std::move(bonds), s);
}

// Origin cluster of a random free 7x7 box with 10..30 sites.
ClusterView small_cluster(std::uint64_t seed_base = 0) {
  for (std::uint64_t seed = seed_base;; ++seed) {
    auto bonds = std::make_shared<const BondConfiguration>(generate_bonds(box(2, 3), 0.55, seed));
    auto view = ClusterView::containing(bonds, bonds->lattice().origin());
    if (view.size() >= 10 && view.size() <= 30) return view;
  }
}

bool adjacent_open(const BondConfiguration& bonds, SiteIndex a, SiteIndex b) {
  const Lattice& lat = bonds.lattice();
  for (int dir = 0; dir < 2 * lat.d(); ++dir)
    if (bonds.open_toward(a, dir) && *lat.neighbor(a, dir) == b) return true;
  return false;
}

}  // namespace

TEST_CASE("myopic step laws") {
  const auto path = view_of(path_cluster(2), pt({0, 0}));
  CounterStream rng(1);
  const SiteIndex o = path.origin(), right = path.lattice().index(pt({1, 0}));
  for (int i = 0; i < 100; ++i) CHECK(step_myopic(path, o, rng) == right);

  std::shared_ptr<const BondConfiguration> all = full(box(2, 3));
  const auto lattice_view = view_of(all, pt({0, 0}));
  std::map<SiteIndex, int> freq;
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++freq[step_myopic(lattice_view, lattice_view.origin(), rng)];
  CHECK(freq.size() == 4);
  for (const auto& [s, c] : freq) CHECK(within_binomial(c / double(n), 0.25, n, 4.0));

  const auto three = view_of(path_cluster(3), pt({1, 0}));
  int left = 0;
  for (int i = 0; i < n; ++i) left += step_myopic(three, three.origin(), rng) == three.lattice().index(pt({0, 0}));
  CHECK(within_binomial(left / double(n), 0.5, n, 4.0));

  const BondConfiguration none(box(2, 2));
  const auto lone = ClusterView::containing(std::make_shared<const BondConfiguration>(none), 12);
  CHECK_THROWS_AS(step_myopic(lone, 12, rng), std::invalid_argument);
}

TEST_CASE("blind step laws") {
  CounterStream rng(2);
  const BondConfiguration none(box(2, 2));
  const auto lone = ClusterView::containing(std::make_shared<const BondConfiguration>(none), 12);
  for (int i = 0; i < 100; ++i) CHECK(step_blind(lone, 12, rng) == 12);

  std::shared_ptr<const BondConfiguration> all = full(box(2, 3, Boundary::torus));
  const auto lattice_view = view_of(all, pt({0, 0}));
  for (int i = 0; i < 1000; ++i) CHECK(step_blind(lattice_view, lattice_view.origin(), rng) != lattice_view.origin());

  const auto end = view_of(path_cluster(2), pt({0, 0}));
  const int n = 100000;
  int stays = 0;
  for (int i = 0; i < n; ++i) stays += step_blind(end, end.origin(), rng) == end.origin();
  CHECK(within_binomial(stays / double(n), 0.75, n, 4.0));
}

TEST_CASE("coupled trajectory invariants") {
  auto bonds = std::make_shared<const BondConfiguration>(generate_bonds(box(2, 30, Boundary::torus), 0.7, 3));
  const auto cluster = ClusterView::containing(bonds, bonds->lattice().origin());
  REQUIRE(cluster.size() > 1);
  const auto traj = run_coupled(cluster, cluster.origin(), 5000, 77);
  CHECK(traj.jumps() == 5000);
  CHECK(traj.t_cum[0] == 0.0);
  CHECK(traj.u_cum[0] == 0);
  for (std::uint64_t p = 0; p < traj.jumps(); ++p) {
    CHECK(traj.t_cum[p + 1] > traj.t_cum[p]);
    CHECK(traj.u_cum[p + 1] >= traj.u_cum[p] + 1);
    CHECK(adjacent_open(*bonds, traj.sites[p], traj.sites[p + 1]));
    CHECK(l1_norm(traj.z(p + 1), traj.z(p)) == 1);
    CHECK(bonds->lattice().wrap_index(traj.z(p + 1)) == traj.sites[p + 1]);
  }
  for (std::uint64_t p = 0; p <= traj.jumps(); ++p) {
    CHECK(y_at(traj, traj.u_cum[p]) == traj.z(p));
    CHECK(x_at(traj, traj.t_cum[p]) == traj.z(p));
  }
  // same seed, same trajectory; the streaming walker agrees with the record
  const auto again = run_coupled(cluster, cluster.origin(), 5000, 77);
  CHECK(again.sites == traj.sites);
  CHECK(again.u_cum == traj.u_cum);
  CoupledWalker walker(cluster, cluster.origin(), 77);
  for (std::uint64_t p = 0; p < 5000; ++p) {
    const auto hold = walker.jump();
    CHECK(hold.jump == p);
    CHECK(hold.t_begin == traj.t_cum[p]);
    CHECK(hold.u_end == traj.u_cum[p + 1]);
    CHECK(hold.degree == cluster.open_degree(traj.sites[p]));
  }
}

TEST_CASE("p = 1 degeneracy: blind and myopic coincide") {
  std::shared_ptr<const BondConfiguration> all = full(box(2, 64, Boundary::torus));
  const auto cluster = view_of(all, pt({0, 0}));
  const auto traj = run_coupled(cluster, cluster.origin(), 20000, 5);
  for (std::uint64_t p = 0; p <= traj.jumps(); ++p) CHECK(traj.u_cum[p] == p);
  for (std::uint64_t n = 0; n <= traj.jumps(); n += 37) CHECK(y_at(traj, n) == traj.z(n));
}

TEST_CASE("holding times have the right means") {
  std::shared_ptr<const BondConfiguration> all = full(box(2, 40, Boundary::torus));
  const auto cluster = view_of(all, pt({0, 0}));
  const int trials = 400;
  const std::uint64_t P = 1000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < trials; ++i) {
    const double r = run_coupled(cluster, cluster.origin(), P, trial_seed(8, i)).t_cum.back() / P;
    sum += r;
    sum_sq += r * r;
  }
  const double mean = sum / trials;
  // T_P / P has standard deviation 1 / sqrt(P) per trial
  CHECK(std::abs(mean - 1.0) <= 3.0 / std::sqrt(double(P)) / std::sqrt(double(trials)));
  CHECK(sum_sq / trials - mean * mean == doctest::Approx(1.0 / P).epsilon(0.2));

  // middle of a 3-site path: open degree 2 of 4, so U increments are Geometric(1/2), mean 2
  const auto three = view_of(path_cluster(3), pt({1, 0}));
  double total = 0.0;
  int count = 0;
  for (int i = 0; i < 200; ++i) {
    const auto traj = run_coupled(three, three.origin(), 200, trial_seed(9, i));
    for (std::uint64_t p = 0; p < traj.jumps(); ++p)
      if (traj.sites[p] == three.origin()) {
        total += static_cast<double>(traj.u_cum[p + 1] - traj.u_cum[p]);
        ++count;
      }
  }
  const double sigma = std::sqrt(2.0) / std::sqrt(double(count));  // variance (1-q)/q^2 = 2
  CHECK(std::abs(total / count - 2.0) <= 4.0 * sigma);
}

TEST_CASE("run_coupled_until reaches every horizon") {
  const auto cluster = small_cluster();
  const auto traj = run_coupled_until(cluster, cluster.origin(), 4, 100.0, 500, 50);
  CHECK(traj.t_cum.back() >= 100.0);
  CHECK(traj.u_cum.back() >= 500);
  CHECK(traj.jumps() >= 50);
  // and stops at the first jump where all three hold
  const auto shorter = run_coupled(cluster, cluster.origin(), traj.jumps() - 1, 4);
  CHECK((shorter.t_cum.back() < 100.0 || shorter.u_cum.back() < 500 || shorter.jumps() < 50));
}

TEST_CASE("x_at and y_at against linear scans") {
  const auto cluster = small_cluster(100);
  const auto traj = run_coupled(cluster, cluster.origin(), 300, 21);
  CHECK(x_at(traj, 0.0) == traj.z(0));
  CHECK(y_at(traj, 0) == traj.z(0));
  CHECK(x_at(traj, std::nextafter(traj.t_cum[1], 0.0)) == traj.z(0));
  CHECK(x_at(traj, traj.t_cum[1]) == traj.z(1));
  CHECK_THROWS_AS(x_at(traj, traj.t_cum.back() + 1.0), std::out_of_range);
  CHECK_THROWS_AS(x_at(traj, -1.0), std::out_of_range);

  auto scan_t = [&](double t) {
    std::uint64_t p = 0;
    while (p + 1 <= traj.jumps() && traj.t_cum[p + 1] <= t) ++p;
    return p;
  };
  auto scan_u = [&](std::uint64_t n) {
    std::uint64_t p = 0;
    while (p + 1 <= traj.jumps() && traj.u_cum[p + 1] <= n) ++p;
    return p;
  };
  CounterStream rng(5);
  for (int i = 0; i < 500; ++i) {
    const double t = uniform01(rng) * traj.t_cum.back();
    CHECK(jump_count_at_time(traj, t) == scan_t(t));
    CHECK(x_at(traj, t) == traj.z(scan_t(t)));
    const std::uint64_t n = uniform_below(rng, traj.u_cum.back() + 1);
    CHECK(jump_count_at_blind_time(traj, n) == scan_u(n));
    CHECK(y_at(traj, n) == traj.z(scan_u(n)));
  }
}

TEST_CASE("direct blind walk") {
  const auto cluster = small_cluster();
  const Path zero = run_blind_direct(cluster, cluster.origin(), 0, 1);
  CHECK(zero.cols() == 1);
  CHECK(Point(zero.col(0)) == cluster.lattice().point(cluster.origin()));

  const BondConfiguration none(box(2, 2));
  const auto lone = ClusterView::containing(std::make_shared<const BondConfiguration>(none), 12);
  const Path stuck = run_blind_direct(lone, 12, 50, 3);
  for (Eigen::Index j = 0; j < stuck.cols(); ++j) CHECK(stuck.col(j) == stuck.col(0));
}

TEST_CASE("blind endpoint law at n = 6 matches the matrix power") {
  const auto cluster = small_cluster(7);
  const auto oracle = build_finite_oracle(cluster);
  const Eigen::MatrixXd p6 = [&] {
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(oracle.blind.rows(), oracle.blind.cols());
    for (int i = 0; i < 6; ++i) m = m * oracle.blind;
    return m;
  }();
  const Eigen::RowVectorXd row = p6.row(oracle.position(cluster.origin()));

  const int samples = 200000;
  Eigen::RowVectorXd direct = Eigen::RowVectorXd::Zero(row.size());
  Eigen::RowVectorXd coupled = Eigen::RowVectorXd::Zero(row.size());
  const Lattice& lat = cluster.lattice();
  for (int i = 0; i < samples; ++i) {
    const Path path = run_blind_direct(cluster, cluster.origin(), 6, trial_seed(40, i));
    direct[oracle.position(lat.wrap_index(path.col(6)))] += 1.0 / samples;
    const auto traj = run_coupled_until(cluster, cluster.origin(), trial_seed(41, i), 0.0, 6);
    coupled[oracle.position(lat.wrap_index(y_at(traj, 6)))] += 1.0 / samples;
  }
  CHECK(0.5 * (direct - row).cwiseAbs().sum() <= 0.02);
  CHECK(0.5 * (coupled - row).cwiseAbs().sum() <= 0.02);
}

TEST_CASE("maximal chemical displacement") {
  std::shared_ptr<const BondConfiguration> all = full(box(2, 30, Boundary::free));
  const auto lattice_view = view_of(all, pt({0, 0}));
  const auto traj = run_coupled(lattice_view, lattice_view.origin(), 400, 12);
  CHECK(max_chemical_displacement(traj, lattice_view, 0, 100) == 0);
  std::int64_t best = 0;
  for (std::uint64_t p = 0; p <= 400; ++p) best = std::max(best, l1_norm(traj.z(p), traj.start));
  CHECK(max_chemical_displacement(traj, lattice_view, 400, 100) == best);

  auto bonds = std::make_shared<const BondConfiguration>(generate_bonds(box(2, 20, Boundary::torus), 0.7, 6));
  const auto cluster = ClusterView::containing(bonds, bonds->lattice().origin());
  const auto walk = run_coupled(cluster, cluster.origin(), 300, 13);
  int recomputed = 0;
  for (std::uint64_t p = 0; p <= 300; ++p)
    recomputed = std::max(recomputed, *chemical_distance(cluster, cluster.origin(), walk.sites[p], 10000));
  CHECK(max_chemical_displacement(walk, cluster, 300, 10000) == recomputed);
  CHECK_THROWS_AS(max_chemical_displacement(walk, cluster, 301, 10000), std::out_of_range);
}

TEST_CASE("boundary contact is flagged") {
  std::shared_ptr<const BondConfiguration> all = full(box(2, 3, Boundary::free));
  const auto cluster = view_of(all, pt({0, 0}));
  const auto traj = run_coupled(cluster, cluster.origin(), 2000, 1);
  REQUIRE(traj.boundary_hit());
  const std::uint64_t c = *traj.censor_jump;
  for (std::uint64_t p = 0; p < c; ++p) CHECK(traj.z(p).cwiseAbs().maxCoeff() < 3);
  CHECK(traj.z(c).cwiseAbs().maxCoeff() == 3);

  std::shared_ptr<const BondConfiguration> torus = full(box(2, 3, Boundary::torus));
  const auto tc = view_of(torus, pt({0, 0}));
  const auto tt = run_coupled(tc, tc.origin(), 2000, 1);
  REQUIRE(tt.boundary_hit());
  CHECK((tt.z(*tt.censor_jump) - tt.start).cwiseAbs().maxCoeff() == 3);
}
