#include "support.hpp"

#include <doctest.h>

#include <set>
#include <sstream>

using namespace testing;

TEST_CASE("lattice indexing round-trips and wraps") {
  const Lattice lat(box(3, 2, Boundary::torus));
  CHECK(lat.site_count() == 125);
  CHECK(lat.point(lat.origin()) == pt({0, 0, 0}));
  for (SiteIndex s = 0; s < lat.site_count(); ++s) CHECK(lat.index(lat.point(s)) == s);
  CHECK(lat.wrap_index(pt({3, 0, 0})) == lat.index(pt({-2, 0, 0})));
  CHECK_THROWS_AS(lat.index(pt({3, 0, 0})), std::out_of_range);
  const Lattice free_lat(box(2, 1));
  CHECK_FALSE(free_lat.neighbor(free_lat.index(pt({1, 0})), 0).has_value());
  CHECK(*free_lat.neighbor(free_lat.index(pt({1, 0})), 1) == free_lat.index(pt({0, 0})));
  CHECK_THROWS(LatticeSpec{1, 4, Boundary::free}.validate());
  CHECK_THROWS(LatticeSpec{2, 0, Boundary::free}.validate());
}

TEST_CASE("p = 1 opens every edge of the box") {
  for (Boundary b : {Boundary::free, Boundary::torus}) {
    const auto spec = box(2, 2, b);
    const auto bonds = generate_bonds(spec, 1.0, 99);
    // free: 2 * side * (side - 1) edges; torus: 2 * side^2
    const std::uint64_t expected = b == Boundary::free ? 2 * 5 * 4 : 2 * 25;
    CHECK(bonds.edge_count() == expected);
    CHECK(bonds.open_edge_count() == expected);
  }
}

TEST_CASE("open-edge fraction matches the binomial law") {
  const auto bonds = generate_bonds(box(2, 64, Boundary::torus), 0.5, 7);
  const double n = static_cast<double>(bonds.edge_count());
  CHECK(within_binomial(bonds.open_edge_count() / n, 0.5, n, 4.0));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (double p : {0.3, 0.7}) {
      const auto b = generate_bonds(box(2, 16, Boundary::free), p, seed);
      const double m = static_cast<double>(b.edge_count());
      CHECK(within_binomial(b.open_edge_count() / m, p, m, 5.0));
    }
  }
}

TEST_CASE("generation is deterministic and monotone in p") {
  const auto a = generate_bonds(box(2, 8, Boundary::torus), 0.7, 42);
  const auto b = generate_bonds(box(2, 8, Boundary::torus), 0.7, 42);
  CHECK(a == b);
  for (int axis = 0; axis < 2; ++axis) CHECK(std::equal(a.plane(axis).begin(), a.plane(axis).end(), b.plane(axis).begin()));
  CHECK_FALSE(a == generate_bonds(box(2, 8, Boundary::torus), 0.7, 43));

  const auto lo = generate_bonds(box(3, 5, Boundary::free), 0.3, 5);
  const auto hi = generate_bonds(box(3, 5, Boundary::free), 0.6, 5);
  for (int axis = 0; axis < 3; ++axis) {
    const auto pl = lo.plane(axis), ph = hi.plane(axis);
    for (std::size_t w = 0; w < pl.size(); ++w) CHECK((pl[w] & ~ph[w]) == 0);
  }
}

TEST_CASE("edge uniforms decide each edge independently of p") {
  const auto spec = box(2, 3, Boundary::torus);
  const auto bonds = generate_bonds(spec, 0.55, 11);
  const SiteIndex n = bonds.lattice().site_count();
  for (int axis = 0; axis < 2; ++axis)
    for (SiteIndex s = 0; s < n; ++s) CHECK(bonds.is_open(s, axis) == (edge_uniform(11, n, axis, s) < 0.55));
}

TEST_CASE("invalid probabilities are rejected") {
  CHECK_THROWS_AS(generate_bonds(box(2, 2), 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(generate_bonds(box(2, 2), 1.5, 1), std::invalid_argument);
}

TEST_CASE("labeling of trivial configurations") {
  const auto all = full(box(2, 3, Boundary::free));
  const auto lab = label_clusters(*all);
  CHECK(lab.cluster_count() == 1);
  CHECK(lab.size_of(lab.largest()) == 49);

  const BondConfiguration none(box(2, 3, Boundary::free));
  const auto singletons = label_clusters(none);
  CHECK(singletons.cluster_count() == 49);
  for (SiteIndex s = 0; s < 49; ++s) CHECK(singletons.label[s] == s);
}

TEST_CASE("labeling of a hand-listed configuration matches DFS") {
  const auto bonds = from_edges(box(2, 2), {{pt({-2, -2}), 0},
                                            {pt({-1, -2}), 1},
                                            {pt({0, 0}), 0},
                                            {pt({0, 0}), 1},
                                            {pt({2, -1}), 1},
                                            {pt({1, 2}), 0}});
  const auto lab = label_clusters(*bonds);
  CHECK(lab.label == dfs_labels(*bonds));
  CHECK(lab.cluster_count() == 25 - 6);
  const Lattice& lat = bonds->lattice();
  CHECK(lab.label[lat.index(pt({-1, -1}))] == lat.index(pt({-2, -2})));
  CHECK(lab.size_of(lab.label[lat.origin()]) == 3);
}

TEST_CASE("labeling matches DFS on random small boxes") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Boundary b = seed % 2 ? Boundary::torus : Boundary::free;
    const int L = 1 + static_cast<int>(seed % 4);
    const auto bonds = generate_bonds(box(2, L, b), 0.3 + 0.004 * static_cast<double>(seed), seed);
    CHECK(label_clusters(bonds).label == dfs_labels(bonds));
    CHECK(origin_in_largest(bonds) == dfs_origin_in_largest(bonds));
  }
}

TEST_CASE("cluster view agrees with the labeling") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto bonds = std::make_shared<const BondConfiguration>(generate_bonds(box(2, 10, Boundary::torus), 0.6, seed));
    const auto lab = label_clusters(*bonds);
    const auto view = ClusterView::containing(bonds, bonds->lattice().origin());
    CHECK(view.label() == lab.label[bonds->lattice().origin()]);
    CHECK(view.size() == lab.size_of(view.label()));
    for (SiteIndex s = 0; s < bonds->lattice().site_count(); ++s)
      CHECK(view.contains(s) == (lab.label[s] == view.label()));
    const auto sites = view.sites();
    CHECK(std::is_sorted(sites.begin(), sites.end()));
    CHECK(sites.size() == view.size());
    if (view.size() > 1)
      for (SiteIndex s : sites) CHECK(view.open_degree(s) >= 1);
  }
}

TEST_CASE("open degree") {
  const auto all = full(box(2, 3));
  CHECK(open_degree(*all, pt({0, 0})) == 4);
  CHECK(open_degree(*all, pt({3, 0})) == 3);
  CHECK(open_degree(*all, pt({3, 3})) == 2);
  const BondConfiguration none(box(2, 3));
  CHECK(open_degree(none, pt({0, 0})) == 0);

  // 3x3 box: an L shape plus one stray edge.
  const auto bonds = from_edges(box(2, 1), {{pt({-1, -1}), 0}, {pt({0, -1}), 0}, {pt({1, -1}), 1}, {pt({-1, 0}), 1}});
  const std::vector<std::pair<Point, int>> expected = {
      {pt({-1, -1}), 1}, {pt({0, -1}), 2}, {pt({1, -1}), 2}, {pt({1, 0}), 1},
      {pt({-1, 0}), 1},  {pt({-1, 1}), 1}, {pt({0, 0}), 0},  {pt({1, 1}), 0}};
  for (const auto& [x, k] : expected) CHECK(open_degree(*bonds, x) == k);

  // open_degree equals the number of incident open edges counted from the edge list
  const auto random = generate_bonds(box(2, 6, Boundary::torus), 0.5, 3);
  const auto adj = adjacency(random);
  for (SiteIndex s = 0; s < random.lattice().site_count(); ++s)
    CHECK(random.open_degree(s) == static_cast<int>(adj[s].size()));
}

TEST_CASE("shift_environment") {
  const auto bonds = generate_bonds(box(2, 4, Boundary::torus), 0.5, 8);
  CHECK(shift_environment(bonds, pt({0, 0})) == bonds);
  CHECK(shift_environment(shift_environment(bonds, pt({2, -3})), pt({-2, 3})) == bonds);
  CHECK(shift_environment(shift_environment(bonds, pt({1, 2})), pt({3, -1})) == shift_environment(bonds, pt({4, 1})));

  // L = 1 torus, single open edge (0,0)-(1,0); shifting by (1,0) moves it to (-1,0)-(0,0).
  const auto single = from_edges(box(2, 1, Boundary::torus), {{pt({0, 0}), 0}});
  const auto moved = shift_environment(*single, pt({1, 0}));
  CHECK(moved.open_edge_count() == 1);
  CHECK(moved.is_open(moved.lattice().index(pt({-1, 0})), 0));

  const auto free_bonds = generate_bonds(box(2, 3), 0.5, 1);
  CHECK(shift_environment(free_bonds, pt({0, 0})) == free_bonds);
  CHECK_THROWS_AS(shift_environment(free_bonds, pt({1, 0})), std::invalid_argument);
}

TEST_CASE("conditioned sampling") {
  const auto sample = sample_conditioned(box(2, 4, Boundary::torus), 1.0, 5, 3);
  CHECK(sample.attempts == 1);
  CHECK(sample.cluster.size() == 81);

  const auto spec = box(2, 12, Boundary::torus);
  const auto s = sample_conditioned(spec, 0.7, 17, 100);
  CHECK(dfs_origin_in_largest(*s.bonds));
  // the accepted configuration is the first accepted attempt
  for (int a = 0; a + 1 < s.attempts; ++a)
    CHECK_FALSE(dfs_origin_in_largest(generate_bonds(spec, 0.7, attempt_seed(17, a))));
  CHECK(*s.bonds == generate_bonds(spec, 0.7, attempt_seed(17, s.attempts - 1)));
}

TEST_CASE("acceptance rate agrees with a direct count") {
  const auto spec = box(2, 64, Boundary::torus);
  const double rate = acceptance_rate(spec, 0.7, 2024, 200);
  int hits = 0;
  const int direct = 10000;
  for (int i = 0; i < direct; ++i)
    hits += dfs_origin_in_largest(generate_bonds(spec, 0.7, derive_key(99, 77, static_cast<std::uint64_t>(i))));
  const double theta = hits / static_cast<double>(direct);
  CHECK(theta > 0.5);
  CHECK(within_binomial(rate, theta, 200, 5.0));
}

TEST_CASE("subcritical conditioning exhausts") {
  const auto spec = box(2, 64, Boundary::torus);
  int hits = 0;
  for (int i = 0; i < 200; ++i) hits += dfs_origin_in_largest(generate_bonds(spec, 0.1, derive_key(5, 77, i)));
  CHECK(hits / 200.0 < 0.1);
  try {
    sample_conditioned(spec, 0.1, 3, 50);
    FAIL("expected exhaustion");
  } catch (const SamplingExhausted& e) {
    CHECK(e.attempts() == 50);
    CHECK(e.acceptance_rate() < 0.1);
  }
  CHECK(likely_subcritical(2, 0.5));
  CHECK_FALSE(likely_subcritical(2, 0.7));
  CHECK(likely_subcritical(3, 0.2));
  CHECK_FALSE(likely_subcritical(5, 0.01));
}

TEST_CASE("bond files round-trip") {
  for (Boundary b : {Boundary::free, Boundary::torus}) {
    const auto bonds = generate_bonds(box(3, 3, b), 0.4, 21);
    std::stringstream buf;
    write_bonds(buf, bonds);
    const std::string bytes = buf.str();
    CHECK(bytes.substr(0, 4) == "PERC");
    CHECK(static_cast<int>(bytes[4]) == 1);
    const std::size_t header = 5 + 1 + 4 + 8 + 8 + 1;
    CHECK(bytes.size() == header + 3 * ((343 + 7) / 8));
    const auto back = read_bonds(buf);
    CHECK(back == bonds);
    CHECK(back.p() == bonds.p());
    CHECK(back.seed() == bonds.seed());
  }
}

TEST_CASE("bond files are validated on read") {
  const auto bonds = generate_bonds(box(2, 2), 1.0, 0);
  std::stringstream buf;
  write_bonds(buf, bonds);
  std::string bytes = buf.str();

  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  std::stringstream a(bad_magic);
  CHECK_THROWS(read_bonds(a));

  std::string truncated = bytes.substr(0, bytes.size() - 1);
  std::stringstream b(truncated);
  CHECK_THROWS(read_bonds(b));

  // site (2, y) has no +e_0 edge on a free 5x5 box; set the bit of site index 20
  std::string face = bytes;
  const std::size_t planes = 27;
  face[planes + 20 / 8] = static_cast<char>(face[planes + 20 / 8] | (1 << (20 % 8)));
  std::stringstream c(face);
  CHECK_THROWS(read_bonds(c));
}
