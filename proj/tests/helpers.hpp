#pragma once

// Shared fixtures and independent oracles for the test suites. Everything
// here recomputes expected values by routes the library does not use
// (explicit loops, grid scans, point-queue arithmetic).

#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "edue/edue.hpp"

namespace testutil {

using edue::ExtendedPoint;
using edue::Matrix;
using edue::ProblemShape;
using edue::Scenario;
using edue::TimeGrid;

inline ProblemShape make_shape(const TimeGrid& grid, const std::vector<std::size_t>& paths_per_od) {
  ProblemShape shape;
  shape.grid = grid;
  std::size_t next = 0;
  for (std::size_t n : paths_per_od) {
    std::vector<std::size_t> group;
    for (std::size_t i = 0; i < n; ++i) group.push_back(next++);
    shape.od_paths.push_back(std::move(group));
  }
  return shape;
}

inline ExtendedPoint random_point(const ProblemShape& shape, std::mt19937_64& rng, double lo = -3.0,
                                  double hi = 3.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  ExtendedPoint x{Matrix(shape.n_paths(), shape.grid.n_steps),
                  std::vector<double>(shape.n_od(), 0.0)};
  for (auto& v : x.h) v = u(rng);
  for (auto& v : x.q) v = u(rng);
  return x;
}

inline ExtendedPoint random_feasible(const ProblemShape& shape, std::mt19937_64& rng,
                                     double scale = 2.0) {
  ExtendedPoint x = random_point(shape, rng, 0.0, scale);
  for (std::size_t w = 0; w < shape.od_paths.size(); ++w) {
    double vol = 0.0;
    for (std::size_t p : shape.od_paths[w])
      for (double v : x.h.row(p)) vol += v;
    x.q[w] = vol * shape.grid.dt();
  }
  return x;
}

/// Inner product recomputed by an explicit double loop.
inline double inner_product_loop(const ExtendedPoint& x, const ExtendedPoint& y,
                                 const TimeGrid& grid) {
  double acc = 0.0;
  for (std::size_t p = 0; p < x.h.rows(); ++p)
    for (std::size_t k = 0; k < x.h.cols(); ++k) acc += x.h(p, k) * y.h(p, k) * grid.dt();
  for (std::size_t w = 0; w < x.q.size(); ++w) acc += x.q[w] * y.q[w];
  return acc;
}

/// Independent projection oracle: per OD pair, sweep the multiplier lambda
/// over a refined grid; each lambda induces the feasible point
/// h = max(0, g + lambda), Q = sum h dt. The sweep keeps whichever point is
/// nearest to (g, R), which is the projection since the true optimum lies on
/// this curve.
inline ExtendedPoint project_grid_scan(const ExtendedPoint& y, const ProblemShape& shape) {
  const double dt = shape.grid.dt();
  ExtendedPoint out = y;
  for (std::size_t w = 0; w < shape.od_paths.size(); ++w) {
    const auto& group = shape.od_paths[w];
    const double r = y.q[w];
    double pos_mass = 0.0;
    for (std::size_t p : group)
      for (double g : y.h.row(p)) pos_mass += std::max(0.0, g + r) * dt;
    const double lam_hi = r + 1.0;
    const double lam_lo = r - (pos_mass + 1.0);

    auto eval = [&](double lam, double& q_out) {
      double dist = 0.0, vol = 0.0;
      for (std::size_t p : group) {
        for (double g : y.h.row(p)) {
          const double hval = std::max(0.0, g + lam);
          dist += (hval - g) * (hval - g) * dt;
          vol += hval;
        }
      }
      const double q = vol * dt;
      dist += (q - r) * (q - r);
      q_out = q;
      return dist;
    };

    double best_lam = lam_lo;
    double lo = lam_lo, hi = lam_hi;
    for (int stage = 0; stage < 4; ++stage) {
      const int n = stage == 0 ? 20000 : 2000;
      double best = std::numeric_limits<double>::infinity();
      const double step = (hi - lo) / n;
      for (int i = 0; i <= n; ++i) {
        const double lam = lo + i * step;
        double q;
        const double d = eval(lam, q);
        if (d < best) {
          best = d;
          best_lam = lam;
        }
      }
      lo = best_lam - 2.0 * step;
      hi = best_lam + 2.0 * step;
    }
    double q;
    eval(best_lam, q);
    out.q[w] = q;
    for (std::size_t p : group)
      for (std::size_t k = 0; k < y.h.cols(); ++k)
        out.h(p, k) = std::max(0.0, y.h(p, k) + best_lam);
  }
  return out;
}

/// phi evaluated directly, for checking roots of the demand fixed point.
inline double phi_direct(const std::vector<std::vector<double>>& z, double r, double q,
                         const TimeGrid& grid) {
  double acc = 0.0;
  for (const auto& row : z)
    for (double v : row) acc += std::max(0.0, v + r - q);
  return acc * grid.dt() - q;
}

/// Synthetic affine strongly monotone operator F(X) = c (X - center) + drift.
/// With zero drift the feasible center solves the VI outright; with a drift
/// the solution is the projection of center - drift/c.
struct AffineOperator {
  ExtendedPoint center;
  double c = 1.0;
  double drift = 0.0;
  edue::OperatorValue operator()(const ExtendedPoint& x) const {
    edue::OperatorValue f;
    f.psi = Matrix(x.h.rows(), x.h.cols());
    for (std::size_t i = 0; i < x.h.rows(); ++i)
      for (std::size_t k = 0; k < x.h.cols(); ++k)
        f.psi(i, k) = c * (x.h(i, k) - center.h(i, k)) + drift;
    f.neg_theta.resize(x.q.size());
    for (std::size_t w = 0; w < x.q.size(); ++w)
      f.neg_theta[w] = c * (x.q[w] - center.q[w]) + drift;
    return f;
  }
  ExtendedPoint solution(const ProblemShape& shape) const {
    ExtendedPoint target = center;
    for (auto& v : target.h) v -= drift / c;
    for (auto& v : target.q) v -= drift / c;
    return edue::project_onto_feasible(target, shape);
  }
};

/// Two-path rotation: F(h1, h2) = (-h2, h1), zero on the demand block.
struct SkewOperator {
  edue::OperatorValue operator()(const ExtendedPoint& x) const {
    edue::OperatorValue f;
    f.psi = Matrix(x.h.rows(), x.h.cols());
    for (std::size_t k = 0; k < x.h.cols(); ++k) {
      f.psi(0, k) = -x.h(1, k);
      f.psi(1, k) = x.h(0, k);
    }
    f.neg_theta.assign(x.q.size(), 0.0);
    return f;
  }
};

inline std::string data_file(const char* name) {
  return std::string(EDUE_DATA_DIR) + "/" + name;
}

inline Scenario load_seven_arc() { return edue::parse_scenario(data_file("seven_arc.json")); }
inline Scenario load_sioux_falls() { return edue::parse_scenario(data_file("sioux_falls.json")); }

/// Single-link corridor scenario used by the loader tests; parameters keep
/// every wave time a whole number of steps.
inline Scenario corridor_scenario(double capacity, int n_steps = 120, double tf = 2.0) {
  Scenario s;
  s.name = "corridor";
  s.grid = TimeGrid{0.0, tf, n_steps};
  s.nodes = {"a", "b"};
  s.links = {{"l1", "a", "b", 1.0, 60.0, 20.0, 200.0, capacity}};
  s.od_pairs = {{"ab", "a", "b"}};
  s.paths = {{"p1", "ab", {"l1"}, {}, 0}};
  s.inverse_demand = edue::InverseDemand::affine({1.2}, {1.0 / 2000.0});
  s.penalty = {0.5 * tf, 0.5, 1.5};
  s.validate();
  return s;
}

}  // namespace testutil
