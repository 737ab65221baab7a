#pragma once

#include <cmath>
#include <functional>
#include <iostream>
#include <limits>
#include <span>
#include <vector>

#include "edue/core.hpp"
#include "edue/hilbert.hpp"
#include "edue/ltm.hpp"
#include "edue/network.hpp"

namespace edue {

/// Value of the equilibrium operator at a point: effective delays on the
/// flow block and the negated inverse-demand costs on the demand block.
/// Stored jointly so pairing it against an ExtendedPoint is a single
/// inner-product evaluation.
struct OperatorValue {
  Matrix psi;
  std::vector<double> neg_theta;

  ExtendedPoint as_point() const { return ExtendedPoint{psi, neg_theta}; }
};

using VIOperator = std::function<OperatorValue(const ExtendedPoint&)>;

/// x + c * F, applying the psi block to flows and the neg_theta block to demands.
inline ExtendedPoint apply_step(const ExtendedPoint& x, double c, const OperatorValue& f) {
  if (!x.h.same_shape(f.psi) || x.q.size() != f.neg_theta.size())
    throw Error(ErrorCode::dimension_mismatch, "apply_step: operator value has wrong shape");
  ExtendedPoint r = x;
  double* d = r.h.data();
  const double* s = f.psi.data();
  for (std::size_t i = 0; i < r.h.size(); ++i) d[i] += c * s[i];
  for (std::size_t w = 0; w < r.q.size(); ++w) r.q[w] += c * f.neg_theta[w];
  return r;
}

/// Equilibrium operator for a traffic scenario. Feasibility of the argument
/// is expected but only warned about, since step probes evaluate it at
/// convex combinations that stay feasible up to roundoff; flow entries that
/// are negative by mere floating-point dust are clamped to zero before the
/// loader sees them.
inline OperatorValue eval_operator(const ExtendedPoint& x, const Scenario& s) {
  if (x.h.rows() != s.paths.size() || x.q.size() != s.od_pairs.size())
    throw Error(ErrorCode::dimension_mismatch, "eval_operator: point does not match scenario");
  PathFlow flows = x.h;
  double worst = 0.0;
  for (auto& v : flows) {
    if (v < 0.0) {
      worst = std::min(worst, v);
      if (v > -1e-7) v = 0.0;
    }
  }
  if (worst < -1e-7)
    std::cerr << "edue: warning: operator evaluated at infeasible point (min flow " << worst
              << ")\n";
  OperatorValue out;
  out.psi = delay_operator(flows, s).psi;
  std::vector<double> theta = s.inverse_demand.theta(x.q);
  out.neg_theta.resize(theta.size());
  for (std::size_t w = 0; w < theta.size(); ++w) out.neg_theta[w] = -theta[w];
  return out;
}

inline VIOperator make_traffic_operator(const Scenario& s) {
  return [&s](const ExtendedPoint& x) { return eval_operator(x, s); };
}

/// Unique root Q >= 0 of
///   phi(Q) = sum_p sum_k max(0, z_p[k] + r - Q) * dt - Q = 0.
/// phi is strictly decreasing with phi(0) >= 0 and phi -> -inf, so bisection
/// on [0, phi(0) + 1] always brackets; when every z + r is nonpositive the
/// root is exactly zero.
inline double solve_demand_scalar(const std::vector<std::span<const double>>& z, double r,
                                  const TimeGrid& grid) {
  if (!std::isfinite(r))
    throw Error(ErrorCode::domain_error, "solve_demand_scalar: non-finite shift");
  const double dt = grid.dt();
  auto phi = [&](double q) {
    double acc = 0.0;
    for (const auto& row : z)
      for (double v : row) acc += std::max(0.0, v + r - q);
    return acc * dt - q;
  };
  for (const auto& row : z)
    for (double v : row)
      if (!std::isfinite(v))
        throw Error(ErrorCode::domain_error, "solve_demand_scalar: non-finite entry");

  const double phi0 = phi(0.0);
  if (phi0 <= 0.0) return 0.0;
  double lo = 0.0, hi = phi0 + 1.0;
  if (phi(hi) > 0.0)
    throw Error(ErrorCode::internal, "solve_demand_scalar: bracket failed");
  constexpr double tol = 1e-12;
  for (int it = 0; it < 80 && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (phi(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

/// Minimum-norm projection of a free point (g, R) onto the feasible set.
/// Per OD pair the projected demand solves the scalar fixed point above with
/// the OD's flow rows and shift R; the flows then follow by clamping with the
/// common multiplier R - Q*.
inline ExtendedPoint project_onto_feasible(const ExtendedPoint& y, const ProblemShape& shape) {
  if (y.q.size() != shape.n_od() || y.h.cols() != static_cast<std::size_t>(shape.grid.n_steps))
    throw Error(ErrorCode::dimension_mismatch, "project_onto_feasible: point does not match shape");
  ExtendedPoint out = y;
  for (std::size_t w = 0; w < shape.od_paths.size(); ++w) {
    std::vector<std::span<const double>> rows;
    rows.reserve(shape.od_paths[w].size());
    for (std::size_t p : shape.od_paths[w]) rows.push_back(y.h.row(p));
    const double q_star = solve_demand_scalar(rows, y.q[w], shape.grid);
    const double lambda = y.q[w] - q_star;
    out.q[w] = q_star;
    for (std::size_t p : shape.od_paths[w])
      for (std::size_t k = 0; k < y.h.cols(); ++k)
        out.h(p, k) = std::max(0.0, y.h(p, k) + lambda);
  }
  return out;
}

inline ExtendedPoint project_onto_feasible(const ExtendedPoint& y, const Scenario& s) {
  return project_onto_feasible(y, s.shape());
}

/// r(X; beta) = X - P[X - beta F(X)]; zero exactly at VI solutions.
inline ExtendedPoint residual(const ExtendedPoint& x, double beta, const VIOperator& op,
                              const ProblemShape& shape) {
  if (!(beta > 0.0)) throw Error(ErrorCode::domain_error, "residual: beta must be > 0");
  return subtract(x, project_onto_feasible(apply_step(x, -beta, op(x)), shape));
}

inline ExtendedPoint residual(const ExtendedPoint& x, double beta, const Scenario& s) {
  return residual(x, beta, make_traffic_operator(s), s.shape());
}

/// Flow-weighted average effective cost per OD; NaN marks OD pairs with
/// nonpositive demand.
inline std::vector<double> od_average_cost(const ExtendedPoint& x, const Matrix& psi,
                                           const ProblemShape& shape) {
  std::vector<double> v(shape.n_od(), std::numeric_limits<double>::quiet_NaN());
  const double dt = shape.grid.dt();
  for (std::size_t w = 0; w < shape.od_paths.size(); ++w) {
    if (!(x.q[w] > 0.0)) continue;
    double acc = 0.0;
    for (std::size_t p : shape.od_paths[w])
      for (std::size_t k = 0; k < x.h.cols(); ++k) acc += psi(p, k) * x.h(p, k);
    v[w] = acc * dt / x.q[w];
  }
  return v;
}

/// How far a feasible point is from equilibrium, per OD pair:
///  - ref_cost: the inverse-demand cost at the realized demand;
///  - max_deficit: worst undercut max(0, ref - psi) over all cells;
///  - used_spread: worst |psi - ref| over cells carrying flow above
///    used_threshold times the OD's peak departure rate;
/// plus the global flow-weighted merit sum (psi - ref) h dt, which vanishes
/// exactly at equilibrium.
struct ViolationReport {
  std::vector<double> ref_cost;
  std::vector<double> max_deficit;
  std::vector<double> used_spread;  // NaN when the OD has no used cells
  double merit = 0.0;
  double max_deficit_all = 0.0;
  double max_used_spread_all = 0.0;
};

inline ViolationReport equilibrium_violation(const ExtendedPoint& x, const Matrix& psi,
                                             const std::vector<double>& theta,
                                             const ProblemShape& shape,
                                             double used_threshold = 1e-3) {
  ViolationReport rep;
  const std::size_t n_od = shape.n_od();
  rep.ref_cost = theta;
  rep.max_deficit.assign(n_od, 0.0);
  rep.used_spread.assign(n_od, std::numeric_limits<double>::quiet_NaN());
  const double dt = shape.grid.dt();
  for (std::size_t w = 0; w < n_od; ++w) {
    double peak = 0.0;
    for (std::size_t p : shape.od_paths[w])
      for (double v : x.h.row(p)) peak = std::max(peak, v);
    const double used_floor = used_threshold * peak;
    double spread = -1.0;
    for (std::size_t p : shape.od_paths[w]) {
      for (std::size_t k = 0; k < x.h.cols(); ++k) {
        const double excess = psi(p, k) - theta[w];
        rep.max_deficit[w] = std::max(rep.max_deficit[w], -excess);
        rep.merit += excess * x.h(p, k) * dt;
        if (peak > 0.0 && x.h(p, k) > used_floor) spread = std::max(spread, std::abs(excess));
      }
    }
    if (spread >= 0.0) {
      rep.used_spread[w] = spread;
      rep.max_used_spread_all = std::max(rep.max_used_spread_all, spread);
    }
    rep.max_deficit_all = std::max(rep.max_deficit_all, rep.max_deficit[w]);
  }
  return rep;
}

inline ViolationReport equilibrium_violation(const ExtendedPoint& x, const Scenario& s,
                                             double used_threshold = 1e-3) {
  const Matrix psi = delay_operator(x.h, s).psi;
  return equilibrium_violation(x, psi, s.inverse_demand.theta(x.q), s.shape(), used_threshold);
}

/// Minty-style probe: min over the candidates X of <F(X), X - x>. A
/// nonnegative value over a rich candidate set is evidence, not proof, that
/// x solves the dual problem.
inline double dual_gap_probe(const ExtendedPoint& x, const std::vector<ExtendedPoint>& candidates,
                             const VIOperator& op, const ProblemShape& shape) {
  double gap = std::numeric_limits<double>::infinity();
  for (const auto& cand : candidates) {
    const OperatorValue f = op(cand);
    gap = std::min(gap, inner_product_E(f.as_point(), subtract(cand, x), shape.grid));
  }
  return candidates.empty() ? 0.0 : gap;
}

inline double dual_gap_probe(const ExtendedPoint& x, const std::vector<ExtendedPoint>& candidates,
                             const Scenario& s) {
  return dual_gap_probe(x, candidates, make_traffic_operator(s), s.shape());
}

}  // namespace edue
