#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace edue;
using namespace testutil;

TEST_CASE("inner product: demand block only") {
  TimeGrid grid{0.0, 1.0, 4};
  ExtendedPoint x{Matrix(1, 4, 0.0), {3.0, 4.0}};
  CHECK(inner_product_E(x, x, grid) == Catch::Approx(25.0).margin(1e-15));
  CHECK(norm_E(x, grid) == Catch::Approx(5.0).margin(1e-15));
}

TEST_CASE("inner product: constant flow quadrature") {
  TimeGrid grid{0.0, 1.0, 4};
  ExtendedPoint x{Matrix(1, 4, 2.0), {0.0}};
  CHECK(inner_product_E(x, x, grid) == Catch::Approx(4.0).margin(1e-15));
}

TEST_CASE("inner product matches explicit double loop on random points") {
  std::mt19937_64 rng(7);
  auto shape = make_shape(TimeGrid{0.0, 1.5, 3}, {2});
  for (int i = 0; i < 50; ++i) {
    const auto x = random_point(shape, rng);
    const auto y = random_point(shape, rng);
    CHECK(inner_product_E(x, y, shape.grid) ==
          Catch::Approx(inner_product_loop(x, y, shape.grid)).margin(1e-12));
  }
}

TEST_CASE("inner product: symmetry, bilinearity, positive definiteness") {
  std::mt19937_64 rng(11);
  auto shape = make_shape(TimeGrid{0.0, 2.0, 5}, {2, 1});
  for (int i = 0; i < 25; ++i) {
    const auto x = random_point(shape, rng);
    const auto y = random_point(shape, rng);
    const auto z = random_point(shape, rng);
    const double a = 0.7, b = -1.3;
    CHECK(inner_product_E(x, y, shape.grid) ==
          Catch::Approx(inner_product_E(y, x, shape.grid)).margin(1e-12));
    const auto combo = axpy(scale(x, a), b, y);
    CHECK(inner_product_E(combo, z, shape.grid) ==
          Catch::Approx(a * inner_product_E(x, z, shape.grid) +
                        b * inner_product_E(y, z, shape.grid))
              .margin(1e-10));
    CHECK(inner_product_E(x, x, shape.grid) >= 0.0);
  }
  const auto zero = zeros_like(random_point(shape, rng));
  CHECK(norm_E(zero, shape.grid) == 0.0);
}

TEST_CASE("norm: homogeneity and triangle inequality") {
  std::mt19937_64 rng(13);
  auto shape = make_shape(TimeGrid{0.0, 1.0, 6}, {3});
  const auto x = random_point(shape, rng);
  CHECK(norm_E(scale(x, -2.0), shape.grid) ==
        Catch::Approx(2.0 * norm_E(x, shape.grid)).margin(1e-12));
  for (int i = 0; i < 50; ++i) {
    const auto a = random_point(shape, rng);
    const auto b = random_point(shape, rng);
    CHECK(norm_E(axpy(a, 1.0, b), shape.grid) <=
          norm_E(a, shape.grid) + norm_E(b, shape.grid) + 1e-12);
  }
}

TEST_CASE("inner product rejects shape mismatch") {
  TimeGrid grid{0.0, 1.0, 4};
  ExtendedPoint x{Matrix(1, 4), {1.0}};
  ExtendedPoint y{Matrix(2, 4), {1.0}};
  CHECK_THROWS_AS(inner_product_E(x, y, grid), Error);
}

TEST_CASE("essential infimum") {
  std::vector<double> v{3.0, 1.0, 2.0};
  CHECK(essential_infimum(v) == 1.0);
  std::vector<double> c(5, 4.2);
  CHECK(essential_infimum(c) == 4.2);
  std::vector<double> bad{1.0, std::nan(""), 2.0};
  CHECK_THROWS_AS(essential_infimum(bad), Error);
  CHECK_THROWS_AS(essential_infimum(std::vector<double>{}), Error);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 20; ++i) {
    std::vector<double> g(7);
    for (auto& e : g) e = u(rng);
    const double m = essential_infimum(g);
    bool attained = false;
    for (double e : g) {
      CHECK(m <= e);
      attained = attained || e == m;
    }
    CHECK(attained);
  }
}

TEST_CASE("od_min_cost takes the min over paths and steps") {
  Scenario s = corridor_scenario(1800.0, 2, 1.0);
  // widen to two paths on one OD via a parallel link
  s.links.push_back({"l2", "a", "b", 1.0, 60.0, 20.0, 200.0, 1800.0});
  s.paths.push_back({"p2", "ab", {"l2"}, {}, 0});
  s.validate();
  DelayField f;
  f.d = Matrix(2, 2);
  f.psi = Matrix(2, 2);
  f.psi(0, 0) = 2.0;
  f.psi(0, 1) = 3.0;
  f.psi(1, 0) = 4.0;
  f.psi(1, 1) = 1.0;
  const auto v = od_min_cost(f, s);
  REQUIRE(v.size() == 1);
  CHECK(v[0] == 1.0);

  // permuting the paths leaves the OD minimum unchanged
  DelayField g;
  g.d = f.d;
  g.psi = Matrix(2, 2);
  g.psi(0, 0) = f.psi(1, 0);
  g.psi(0, 1) = f.psi(1, 1);
  g.psi(1, 0) = f.psi(0, 0);
  g.psi(1, 1) = f.psi(0, 1);
  CHECK(od_min_cost(g, s)[0] == v[0]);
}

TEST_CASE("check_feasible reports defects") {
  Scenario s = corridor_scenario(1800.0, 4, 1.0);
  ExtendedPoint x{Matrix(1, 4, 1.0), {1.0}};
  auto rep = check_feasible(x, s, 1e-9);
  CHECK(rep.feasible);
  CHECK(rep.max_defect == Catch::Approx(0.0).margin(1e-12));

  x.q[0] = 2.0;
  rep = check_feasible(x, s, 1e-9);
  CHECK_FALSE(rep.feasible);
  CHECK(rep.defect[0] == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("demand_from_cost inverts the affine law") {
  auto theta = InverseDemand::affine({1.2}, {1.0 / 2000.0});
  std::vector<double> v1{1.2};
  CHECK(demand_from_cost(theta, v1)[0] == Catch::Approx(0.0).margin(1e-12));
  std::vector<double> v2{0.7};
  CHECK(demand_from_cost(theta, v2)[0] == Catch::Approx(1000.0).margin(1e-9));
  std::vector<double> v3{2.0};
  CHECK(demand_from_cost(theta, v3)[0] == 0.0);
}

TEST_CASE("feasible points dominate their demand norm") {
  std::mt19937_64 rng(17);
  auto shape = make_shape(TimeGrid{0.0, 1.0, 5}, {2, 2});
  for (int i = 0; i < 30; ++i) {
    const auto x = random_feasible(shape, rng);
    double qq = 0.0;
    for (double q : x.q) qq += q * q;
    CHECK(norm_E(x, shape.grid) * norm_E(x, shape.grid) >= qq - 1e-12);
  }
}

TEST_CASE("uniform_start is feasible and uniform") {
  Scenario s = corridor_scenario(1800.0);
  const auto x = uniform_start(s, 1000.0);
  CHECK(x.q[0] == 1000.0);
  const auto rep = check_feasible(x, s, 1e-9);
  CHECK(rep.feasible);
  const double expected_rate = 1000.0 / 2.0;  // one path, 2 h horizon
  CHECK(x.h(0, 0) == Catch::Approx(expected_rate).margin(1e-9));
}
