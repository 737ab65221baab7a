#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace edue;
using namespace testutil;

namespace {

// merge + diverge fixture: link a fans out to c and e, link b merges into c
Scenario diamond_scenario(double cap_c) {
  Scenario s;
  s.name = "diamond";
  s.grid = TimeGrid{0.0, 2.0, 120};
  s.nodes = {"o1", "o2", "m", "d1", "d2"};
  s.links = {
      {"a", "o1", "m", 1.0, 60.0, 20.0, 200.0, 2400.0},
      {"b", "o2", "m", 1.0, 60.0, 20.0, 200.0, 2400.0},
      {"c", "m", "d1", 1.0, 60.0, 20.0, 200.0, cap_c},
      {"e", "m", "d2", 2.0, 60.0, 20.0, 200.0, 2400.0},
  };
  s.od_pairs = {{"w1", "o1", "d1"}, {"w2", "o1", "d2"}, {"w3", "o2", "d1"}};
  s.paths = {
      {"p1", "w1", {"a", "c"}, {}, 0},
      {"p2", "w2", {"a", "e"}, {}, 0},
      {"p3", "w3", {"b", "c"}, {}, 0},
  };
  s.inverse_demand = InverseDemand::affine({1.2, 1.2, 1.2}, {5e-4, 5e-4, 5e-4});
  s.penalty = {1.0, 0.5, 1.5};
  s.validate();
  return s;
}

PathFlow random_flow(const Scenario& s, std::mt19937_64& rng, double peak) {
  std::uniform_real_distribution<double> u(0.0, peak);
  PathFlow h(s.paths.size(), s.grid.n_steps);
  for (auto& v : h) v = u(rng);
  return h;
}

void check_physics(const Scenario& s, const LoadResult& res) {
  // curve ordering and nonnegativity
  for (const auto& lc : res.links) {
    for (std::size_t c = 0; c < lc.commodities.size(); ++c) {
      for (std::size_t m = 0; m < res.n_samples; ++m) {
        CAPTURE(c, m);
        REQUIRE(lc.down[c][m] <= lc.up[c][m] + 1e-9);
        if (m > 0) {
          REQUIRE(lc.up[c][m] >= lc.up[c][m - 1] - 1e-12);
          REQUIRE(lc.down[c][m] >= lc.down[c][m - 1] - 1e-12);
        }
      }
      REQUIRE(lc.up[c][0] == 0.0);
      REQUIRE(lc.down[c][0] == 0.0);
    }
  }
  // per-step outflow within capacity
  for (std::size_t a = 0; a < res.links.size(); ++a) {
    const double cap_step = s.links[a].flow_capacity * res.dt;
    const auto& tot = res.links[a].down_total;
    for (std::size_t m = 1; m < res.n_samples; ++m)
      REQUIRE(tot[m] - tot[m - 1] <= cap_step + 1e-12);
  }
  // conservation per commodity
  for (std::size_t p = 0; p < s.paths.size(); ++p)
    REQUIRE(res.absorbed[p] == Catch::Approx(res.injected[p]).margin(1e-6));
}

void check_fifo(const Scenario& s, const Matrix& d) {
  const double dt = s.grid.dt();
  for (std::size_t p = 0; p < d.rows(); ++p)
    for (std::size_t k = 1; k < d.cols(); ++k) {
      CAPTURE(p, k);
      REQUIRE(s.grid.time(static_cast<int>(k) - 1) + d(p, k - 1) <=
              s.grid.time(static_cast<int>(k)) + d(p, k) + dt);
    }
}

}  // namespace

TEST_CASE("free-flow corridor: exact one-minute delay") {
  Scenario s = corridor_scenario(1800.0);
  PathFlow h(1, s.grid.n_steps, 0.0);
  h(0, 3) = 30.0;  // tiny pulse, far below capacity
  const LoadResult res = load_network(h, s);
  for (int k = 0; k < s.grid.n_steps; ++k)
    REQUIRE(res.depart_delay(0, k) == Catch::Approx(1.0 / 60.0).margin(1e-12));
  check_physics(s, res);
}

TEST_CASE("zero inflow: curves vanish, delays are free-flow") {
  Scenario s = diamond_scenario(900.0);
  const PathFlow h(s.paths.size(), s.grid.n_steps, 0.0);
  const LoadResult res = load_network(h, s);
  for (const auto& lc : res.links)
    for (std::size_t c = 0; c < lc.commodities.size(); ++c)
      for (std::size_t m = 0; m < res.n_samples; ++m) {
        REQUIRE(lc.up[c][m] == 0.0);
        REQUIRE(lc.down[c][m] == 0.0);
      }
  // p1: a + c = 2 min; p2: a + e = 3 min; p3: b + c = 2 min
  REQUIRE(res.depart_delay(0, 10) == Catch::Approx(2.0 / 60.0).margin(1e-12));
  REQUIRE(res.depart_delay(1, 10) == Catch::Approx(3.0 / 60.0).margin(1e-12));
  REQUIRE(res.depart_delay(2, 10) == Catch::Approx(2.0 / 60.0).margin(1e-12));
}

TEST_CASE("single bottleneck matches the point-queue hand calculation") {
  // feed 2400 veh/h into a 1200 veh/h link for half an hour, then stop
  const double q = 2400.0, cap = 1200.0, tau = 0.5;
  Scenario s = corridor_scenario(cap);
  const double dt = s.grid.dt();
  const double ff = 1.0 / 60.0;
  PathFlow h(1, s.grid.n_steps, 0.0);
  const int feed_steps = static_cast<int>(tau / dt + 0.5);
  for (int k = 0; k < feed_steps; ++k) h(0, k) = q;
  const LoadResult res = load_network(h, s);

  for (int k = 0; k < s.grid.n_steps; ++k) {
    const double t = s.grid.time(k);
    const double arrivals = q * std::min(t, tau);
    const double entry = std::max(t, arrivals / cap);
    const double expected = entry + ff - t;
    CAPTURE(k);
    REQUIRE(res.depart_delay(0, k) == Catch::Approx(expected).margin(1e-9));
  }
  // growth then linear decay back to free flow
  REQUIRE(res.depart_delay(0, feed_steps / 2) > ff + 0.1);
  REQUIRE(res.depart_delay(0, s.grid.n_steps - 1) == Catch::Approx(ff).margin(1e-9));
  REQUIRE(res.injected[0] == Catch::Approx(q * tau).margin(1e-9));
  check_physics(s, res);
}

TEST_CASE("random inflows: FIFO, conservation, capacity (merge/diverge)") {
  Scenario s = diamond_scenario(600.0);  // tight middle link forces queueing
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 5; ++trial) {
    const PathFlow h = random_flow(s, rng, 900.0);
    const LoadResult res = load_network(h, s);
    check_physics(s, res);
    check_fifo(s, res.depart_delay);
  }
}

TEST_CASE("causality: flow added after a departure leaves its delay alone") {
  Scenario s = corridor_scenario(1200.0);
  std::mt19937_64 rng(5);
  PathFlow h1 = random_flow(s, rng, 1000.0);
  const int cut = 40;
  PathFlow h2 = h1;
  for (int k = cut + 1; k < s.grid.n_steps; ++k) h2(0, k) += 800.0;
  const Matrix d1 = load_network(h1, s).depart_delay;
  const Matrix d2 = load_network(h2, s).depart_delay;
  for (int k = 0; k <= cut; ++k) {
    CAPTURE(k);
    REQUIRE(d2(0, k) == Catch::Approx(d1(0, k)).margin(s.grid.dt()));
  }
  // uncongested variant: exact equality
  PathFlow g1(1, s.grid.n_steps, 100.0);
  PathFlow g2 = g1;
  for (int k = cut + 1; k < s.grid.n_steps; ++k) g2(0, k) = 1100.0;
  const Matrix e1 = load_network(g1, s).depart_delay;
  const Matrix e2 = load_network(g2, s).depart_delay;
  for (int k = 0; k <= cut; ++k) REQUIRE(e2(0, k) == e1(0, k));
}

TEST_CASE("doubling the grid resolution keeps free-flow delays") {
  Scenario coarse = corridor_scenario(1800.0, 120, 2.0);
  Scenario fine = corridor_scenario(1800.0, 240, 2.0);
  PathFlow hc(1, 120, 60.0);
  PathFlow hf(1, 240, 60.0);
  const Matrix dc = load_network(hc, coarse).depart_delay;
  const Matrix df = load_network(hf, fine).depart_delay;
  for (int k = 0; k < 120; ++k)
    REQUIRE(dc(0, k) == Catch::Approx(df(0, 2 * k)).margin(1e-9));
}

TEST_CASE("effective delay applies the piecewise-linear penalty") {
  TimeGrid grid{0.0, 2.0, 2};
  ArrivalPenalty pen{1.0, 0.4, 2.0};
  Matrix d(1, 2);

  d(0, 0) = 0.5;  // t = 0.0 -> arrival 0.5, early by 0.5
  d(0, 1) = 0.5;  // t = 1.0 -> arrival 1.5, late by 0.5
  Matrix psi = effective_delay(d, pen, grid);
  CHECK(psi(0, 0) == Catch::Approx(0.5 + 0.4 * 0.5).margin(1e-15));
  CHECK(psi(0, 1) == Catch::Approx(0.5 + 2.0 * 0.5).margin(1e-15));

  TimeGrid g2{0.5, 1.5, 1};  // depart at exactly T_A - d
  Matrix d2(1, 1);
  d2(0, 0) = 0.5;
  Matrix psi2 = effective_delay(d2, ArrivalPenalty{1.0, 0.4, 2.0}, g2);
  CHECK(psi2(0, 0) == Catch::Approx(0.5).margin(1e-15));

  CHECK(psi(0, 0) >= d(0, 0));
  CHECK(psi(0, 1) >= d(0, 1));
}

TEST_CASE("delay_operator composes loading and the penalty") {
  Scenario s = corridor_scenario(1200.0);
  std::mt19937_64 rng(9);
  const PathFlow h = random_flow(s, rng, 800.0);
  const DelayField f = delay_operator(h, s);
  const LoadResult res = load_network(h, s);
  const Matrix psi = effective_delay(res.depart_delay, s.penalty, s.grid);
  REQUIRE(f.d == res.depart_delay);
  REQUIRE(f.psi == psi);
  for (std::size_t i = 0; i < f.psi.size(); ++i)
    REQUIRE(f.psi.data()[i] >= f.d.data()[i] - 1e-15);
}

TEST_CASE("permuting the path order permutes the delay rows") {
  Scenario s1 = diamond_scenario(900.0);
  Scenario s2 = s1;
  std::swap(s2.paths[0], s2.paths[2]);
  s2.validate();
  std::mt19937_64 rng(21);
  PathFlow h1 = random_flow(s1, rng, 700.0);
  PathFlow h2(3, s1.grid.n_steps);
  for (int k = 0; k < s1.grid.n_steps; ++k) {
    h2(0, k) = h1(2, k);
    h2(1, k) = h1(1, k);
    h2(2, k) = h1(0, k);
  }
  const Matrix d1 = load_network(h1, s1).depart_delay;
  const Matrix d2 = load_network(h2, s2).depart_delay;
  for (int k = 0; k < s1.grid.n_steps; ++k) {
    REQUIRE(d1(0, k) == d2(2, k));
    REQUIRE(d1(1, k) == d2(1, k));
    REQUIRE(d1(2, k) == d2(0, k));
  }
}

TEST_CASE("negative departure rates are rejected") {
  Scenario s = corridor_scenario(1200.0);
  PathFlow h(1, s.grid.n_steps, 0.0);
  h(0, 2) = -0.5;
  CHECK_THROWS_AS(load_network(h, s), Error);
}

TEST_CASE("a network that cannot empty reports the worst link") {
  Scenario s = corridor_scenario(1.0, 10, 1.0);  // 1 veh/h capacity
  PathFlow h(1, 10, 1000.0);
  try {
    load_network(h, s);
    FAIL("expected horizon_too_short");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::horizon_too_short);
    CHECK(std::string(e.what()).find("l1") != std::string::npos);
  }
}
