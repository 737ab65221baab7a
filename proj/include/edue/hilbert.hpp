#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "edue/core.hpp"
#include "edue/network.hpp"
#include "edue/time_grid.hpp"

namespace edue {

using PathFlow = Matrix;                  // |P| x n_steps departure rates (veh/h)
using DemandVector = std::vector<double>;  // |W| total volumes (veh)

/// A point of the product space: square-integrable path departure rates plus
/// the finite-dimensional OD demand vector. Differences and pre-projection
/// probes are carried by the same type, so entries are not sign-constrained
/// here; feasibility is a predicate (check_feasible), not a type invariant.
struct ExtendedPoint {
  PathFlow h;
  DemandVector q;

  friend bool operator==(const ExtendedPoint& a, const ExtendedPoint& b) {
    return a.h == b.h && a.q == b.q;
  }
};

inline void require_same_shape(const ExtendedPoint& x, const ExtendedPoint& y) {
  if (!x.h.same_shape(y.h) || x.q.size() != y.q.size())
    throw Error(ErrorCode::dimension_mismatch, "extended points differ in shape");
}

/// Inner product of the extended space: left-endpoint quadrature of the
/// flow term plus the Euclidean demand term.
inline double inner_product_E(const ExtendedPoint& x, const ExtendedPoint& y,
                              const TimeGrid& grid) {
  require_same_shape(x, y);
  if (x.h.cols() != static_cast<std::size_t>(grid.n_steps))
    throw Error(ErrorCode::dimension_mismatch, "extended point does not match grid");
  double flow_term = 0.0;
  const double* a = x.h.data();
  const double* b = y.h.data();
  const std::size_t n = x.h.size();
  for (std::size_t i = 0; i < n; ++i) flow_term += a[i] * b[i];
  double demand_term = 0.0;
  for (std::size_t w = 0; w < x.q.size(); ++w) demand_term += x.q[w] * y.q[w];
  return flow_term * grid.dt() + demand_term;
}

inline double norm_E(const ExtendedPoint& x, const TimeGrid& grid) {
  return std::sqrt(inner_product_E(x, x, grid));
}

inline ExtendedPoint zeros_like(const ExtendedPoint& x) {
  return ExtendedPoint{Matrix(x.h.rows(), x.h.cols()), DemandVector(x.q.size(), 0.0)};
}

/// x + c*y
inline ExtendedPoint axpy(const ExtendedPoint& x, double c, const ExtendedPoint& y) {
  require_same_shape(x, y);
  ExtendedPoint r = x;
  double* d = r.h.data();
  const double* s = y.h.data();
  for (std::size_t i = 0; i < r.h.size(); ++i) d[i] += c * s[i];
  for (std::size_t w = 0; w < r.q.size(); ++w) r.q[w] += c * y.q[w];
  return r;
}

inline ExtendedPoint subtract(const ExtendedPoint& x, const ExtendedPoint& y) {
  return axpy(x, -1.0, y);
}

inline ExtendedPoint scale(const ExtendedPoint& x, double c) {
  ExtendedPoint r = x;
  for (auto& v : r.h) v *= c;
  for (auto& v : r.q) v *= c;
  return r;
}

/// Discrete essential infimum of a per-step cost vector. Every step carries
/// positive measure dt, so this is the plain minimum. Non-finite entries are
/// rejected rather than propagated.
inline double essential_infimum(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::domain_error, "essential_infimum: empty vector");
  double m = values[0];
  for (double v : values) {
    if (!std::isfinite(v))
      throw Error(ErrorCode::domain_error, "essential_infimum: non-finite cost entry");
    if (v < m) m = v;
  }
  return m;
}

struct FeasibilityReport {
  double min_flow = 0.0;            // most negative h entry (0 if none)
  std::vector<double> defect;       // per OD: |sum_p sum_k h*dt - Q|
  double max_defect = 0.0;
  double tol = 0.0;
  bool feasible = false;
};

/// Reports how far (h, Q) sits from the feasible set: the worst negative
/// flow entry and the per-OD demand-conservation defect.
inline FeasibilityReport check_feasible(const ExtendedPoint& x, const Scenario& s,
                                        double tol = 1e-9) {
  if (x.h.rows() != s.paths.size() || x.h.cols() != static_cast<std::size_t>(s.grid.n_steps) ||
      x.q.size() != s.od_pairs.size())
    throw Error(ErrorCode::dimension_mismatch, "check_feasible: point does not match scenario");
  FeasibilityReport rep;
  rep.tol = tol;
  rep.min_flow = 0.0;
  for (double v : x.h) rep.min_flow = std::min(rep.min_flow, v);
  rep.defect.resize(s.od_pairs.size());
  const double dt = s.grid.dt();
  for (std::size_t w = 0; w < s.od_pairs.size(); ++w) {
    double vol = 0.0;
    for (std::size_t p : s.od_paths[w]) {
      double row_sum = 0.0;
      for (double v : x.h.row(p)) row_sum += v;
      vol += row_sum;
    }
    rep.defect[w] = std::abs(vol * dt - x.q[w]);
    rep.max_defect = std::max(rep.max_defect, rep.defect[w]);
  }
  rep.feasible = rep.min_flow >= -tol && rep.max_defect <= tol;
  return rep;
}

/// Forward demand function, the inverse of the affine cost law:
/// Q_w = max(0, (a_w - v_w)/b_w). Reporting and initialization only.
inline DemandVector demand_from_cost(const InverseDemand& theta, std::span<const double> v) {
  if (!theta.is_affine())
    throw Error(ErrorCode::invalid_scenario, "demand_from_cost: requires affine inverse demand");
  if (v.size() != theta.dim())
    throw Error(ErrorCode::dimension_mismatch, "demand_from_cost: cost vector has wrong length");
  DemandVector q(theta.dim());
  for (std::size_t w = 0; w < q.size(); ++w) {
    if (!(theta.slope()[w] > 0.0))
      throw Error(ErrorCode::invalid_scenario, "demand_from_cost: zero slope");
    q[w] = std::max(0.0, (theta.intercept()[w] - v[w]) / theta.slope()[w]);
  }
  return q;
}

/// Feasible starting point: q0[w] vehicles spread uniformly over every path
/// and step of OD pair w.
inline ExtendedPoint uniform_start(const ProblemShape& shape, const DemandVector& q0) {
  if (q0.size() != shape.n_od())
    throw Error(ErrorCode::dimension_mismatch, "uniform_start: q0 has wrong length");
  ExtendedPoint x{Matrix(shape.n_paths(), shape.grid.n_steps), q0};
  for (std::size_t w = 0; w < shape.od_paths.size(); ++w) {
    const double rate = q0[w] / (static_cast<double>(shape.od_paths[w].size()) * shape.grid.horizon());
    for (std::size_t p : shape.od_paths[w])
      for (auto& v : x.h.row(p)) v = rate;
  }
  return x;
}

inline ExtendedPoint uniform_start(const Scenario& s, double q0_each) {
  return uniform_start(s.shape(), DemandVector(s.od_pairs.size(), q0_each));
}

}  // namespace edue
