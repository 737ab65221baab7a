#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "edue/core.hpp"
#include "edue/hilbert.hpp"
#include "edue/network.hpp"
#include "edue/projection.hpp"

namespace edue {

enum class SolveMethod { projection, self_adaptive, proximal_point };

inline const char* to_string(SolveMethod m) {
  switch (m) {
    case SolveMethod::projection: return "projection";
    case SolveMethod::self_adaptive: return "self_adaptive";
    case SolveMethod::proximal_point: return "proximal_point";
  }
  return "unknown";
}

enum class Termination { converged, max_iters, max_dnl, error };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::converged: return "converged";
    case Termination::max_iters: return "max_iters";
    case Termination::max_dnl: return "max_dnl";
    case Termination::error: return "error";
  }
  return "unknown";
}

struct SolverConfig {
  SolveMethod method = SolveMethod::projection;

  double alpha = 0.5;  // projection step length

  // self-adaptive step control
  double mu = 0.5;
  double gamma = 1.8;
  double theta = 1.5;
  double line_L = 0.9;
  int line_search_cap = 40;

  // proximal point
  double ppm_a = 10.0;
  double ppm_delta = 1e-3;
  double inner_tol = 1e-4;
  int inner_max_iters = 200;
  double inner_alpha = 0.0;            // 0 selects the default 1/(2a)
  std::optional<double> diameter;      // overrides the estimated feasible-set diameter

  double epsilon = 1e-5;  // relative-gap / relative-residual threshold
  int max_iters = 50000;
  long max_dnl = 200000000;

  void validate() const {
    if (!(epsilon > 0.0)) throw Error(ErrorCode::invalid_config, "epsilon must be > 0");
    if (max_iters < 1) throw Error(ErrorCode::invalid_config, "max_iters must be >= 1");
    if (max_dnl < 1) throw Error(ErrorCode::invalid_config, "max_dnl must be >= 1");
    switch (method) {
      case SolveMethod::projection:
        if (!(alpha > 0.0)) throw Error(ErrorCode::invalid_config, "alpha must be > 0");
        break;
      case SolveMethod::self_adaptive:
        if (!(mu > 0.0 && mu < 1.0)) throw Error(ErrorCode::invalid_config, "mu must lie in (0,1)");
        if (!(gamma > 0.0 && gamma < 2.0))
          throw Error(ErrorCode::invalid_config, "gamma must lie in (0,2)");
        if (!(theta > 1.0)) throw Error(ErrorCode::invalid_config, "theta must exceed 1");
        if (!(line_L > 0.0 && line_L < 1.0))
          throw Error(ErrorCode::invalid_config, "line_L must lie in (0,1)");
        if (line_search_cap < 1)
          throw Error(ErrorCode::invalid_config, "line_search_cap must be >= 1");
        break;
      case SolveMethod::proximal_point:
        if (!(ppm_a > 0.0)) throw Error(ErrorCode::invalid_config, "ppm_a must be > 0");
        if (!(ppm_delta > 0.0)) throw Error(ErrorCode::invalid_config, "ppm_delta must be > 0");
        if (!(inner_tol > 0.0)) throw Error(ErrorCode::invalid_config, "inner_tol must be > 0");
        if (inner_max_iters < 1)
          throw Error(ErrorCode::invalid_config, "inner_max_iters must be >= 1");
        break;
    }
  }
};

struct IterationRecord {
  int k = 0;
  double gap = 0.0;  // relative gap (projection/proximal) or relative residual (self-adaptive)
  std::vector<double> q;
  std::vector<double> avg_cost;
  long dnl_calls = 0;
};

struct IterateHistory {
  std::vector<IterationRecord> iterations;
  ExtendedPoint final_point;
  Termination reason = Termination::converged;
  long dnl_calls = 0;
  double wall_seconds = 0.0;
  // proximal point only
  double certificate = std::numeric_limits<double>::quiet_NaN();  // a*D*||X^{k+1}-X^k||
  std::string fired_rule;  // "displacement_bound" or "relative_gap"
};

class InnerStallError : public Error {
 public:
  InnerStallError(const std::string& what, ExtendedPoint best)
      : Error(ErrorCode::inner_stall, what), best_iterate(std::move(best)) {}
  ExtendedPoint best_iterate;
};

namespace detail {

inline double checked_norm(const ExtendedPoint& x, const TimeGrid& grid) {
  const double n = norm_E(x, grid);
  if (n == 0.0)
    throw Error(ErrorCode::degenerate_iterate, "iterate has zero norm; relative gap undefined");
  return n;
}

struct Stopwatch {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

}  // namespace detail

/// Fixed-step projection iteration X <- P[X - alpha F(X)], one operator
/// evaluation per iteration, stopping when consecutive iterates agree to the
/// configured relative gap.
inline IterateHistory projection_solve(const ExtendedPoint& x0, const VIOperator& op,
                                       const ProblemShape& shape, const SolverConfig& cfg) {
  cfg.validate();
  detail::Stopwatch clock;
  IterateHistory hist;
  ExtendedPoint x = x0;
  long dnl = 0;
  hist.reason = Termination::max_iters;
  for (int k = 0; k < cfg.max_iters; ++k) {
    if (dnl + 1 > cfg.max_dnl) {
      hist.reason = Termination::max_dnl;
      break;
    }
    const OperatorValue f = op(x);
    ++dnl;
    const ExtendedPoint next = project_onto_feasible(apply_step(x, -cfg.alpha, f), shape);
    const double gap = norm_E(subtract(next, x), shape.grid) / detail::checked_norm(x, shape.grid);
    hist.iterations.push_back({k, gap, x.q, od_average_cost(x, f.psi, shape), dnl});
    x = next;
    if (gap <= cfg.epsilon) {
      hist.reason = Termination::converged;
      break;
    }
  }
  hist.final_point = std::move(x);
  hist.dnl_calls = dnl;
  hist.wall_seconds = clock.seconds();
  return hist;
}

inline IterateHistory projection_solve(const ExtendedPoint& x0, const Scenario& s,
                                       const SolverConfig& cfg) {
  return projection_solve(x0, make_traffic_operator(s), s.shape(), cfg);
}

struct SearchQuantities {
  ExtendedPoint r;  // residual at (x, beta)
  ExtendedPoint d;  // alpha*r + beta*F(x - alpha*r)
  ExtendedPoint g;  // alpha*[r - beta*(F(x) - F(x - alpha*r))]
  double rho = 0.0;
};

/// Assembles the search direction and step factor of the self-adaptive
/// method from scratch (two operator evaluations).
inline SearchQuantities sa_search_quantities(const ExtendedPoint& x, double alpha, double beta,
                                             const VIOperator& op, const ProblemShape& shape) {
  if (!(alpha > 0.0) || !(beta > 0.0))
    throw Error(ErrorCode::domain_error, "sa_search_quantities: alpha and beta must be > 0");
  SearchQuantities out;
  const OperatorValue fx = op(x);
  out.r = subtract(x, project_onto_feasible(apply_step(x, -beta, fx), shape));
  const OperatorValue f2 = op(axpy(x, -alpha, out.r));
  out.d = apply_step(scale(out.r, alpha), beta, f2);
  ExtendedPoint fdiff = subtract(fx.as_point(), f2.as_point());
  out.g = scale(axpy(out.r, -beta, fdiff), alpha);
  const double dd = inner_product_E(out.d, out.d, shape.grid);
  const double rg = inner_product_E(out.r, out.g, shape.grid);
  if (dd == 0.0) {
    if (norm_E(out.r, shape.grid) > 0.0)
      throw Error(ErrorCode::internal, "sa_search_quantities: zero direction with nonzero residual");
    out.rho = 0.0;
  } else {
    out.rho = rg / dd;
  }
  return out;
}

inline SearchQuantities sa_search_quantities(const ExtendedPoint& x, double alpha, double beta,
                                             const Scenario& s) {
  return sa_search_quantities(x, alpha, beta, make_traffic_operator(s), s.shape());
}

/// Self-adaptive projection method. Each iteration computes the residual at
/// step beta_k = min(1, theta*alpha_k), stops on the relative residual, and
/// otherwise backtracks alpha_{k+1} = beta_k * mu^m until the operator
/// variation over the trial step is dominated by the residual, then takes a
/// projected step along d scaled by gamma*rho.
inline IterateHistory sa_solve(const ExtendedPoint& x0, const VIOperator& op,
                               const ProblemShape& shape, const SolverConfig& cfg) {
  cfg.validate();
  detail::Stopwatch clock;
  IterateHistory hist;
  ExtendedPoint x = x0;
  long dnl = 0;
  double alpha = 1.0;
  hist.reason = Termination::max_iters;
  for (int k = 0; k < cfg.max_iters; ++k) {
    const double beta = std::min(1.0, cfg.theta * alpha);
    if (dnl + 1 > cfg.max_dnl) {
      hist.reason = Termination::max_dnl;
      break;
    }
    const OperatorValue fx = op(x);
    ++dnl;
    const ExtendedPoint proj = project_onto_feasible(apply_step(x, -beta, fx), shape);
    const ExtendedPoint r = subtract(x, proj);
    const double rnorm = norm_E(r, shape.grid);
    const double rel = rnorm / detail::checked_norm(x, shape.grid);
    hist.iterations.push_back({k, rel, x.q, od_average_cost(x, fx.psi, shape), dnl});
    if (rel <= cfg.epsilon) {
      hist.reason = Termination::converged;
      break;
    }

    double alpha_next = beta;
    OperatorValue f2;
    bool accepted = false;
    for (int m = 0; m <= cfg.line_search_cap; ++m) {
      alpha_next = beta * std::pow(cfg.mu, m);
      if (dnl + 1 > cfg.max_dnl) break;
      f2 = op(axpy(x, -alpha_next, r));
      ++dnl;
      const double fdiff = norm_E(subtract(fx.as_point(), f2.as_point()), shape.grid);
      if (beta * fdiff <= cfg.line_L * rnorm) {
        accepted = true;
        break;
      }
      if (m == cfg.line_search_cap)
        throw Error(ErrorCode::step_failure,
                    "line search exhausted " + std::to_string(cfg.line_search_cap) +
                        " trials at iteration " + std::to_string(k) + " (residual " +
                        std::to_string(rnorm) + ", operator variation " +
                        std::to_string(fdiff) + ")");
    }
    if (!accepted) {
      hist.reason = Termination::max_dnl;
      break;
    }
    const ExtendedPoint d = apply_step(scale(r, alpha_next), beta, f2);
    const ExtendedPoint fdiff = subtract(fx.as_point(), f2.as_point());
    const ExtendedPoint g = scale(axpy(r, -beta, fdiff), alpha_next);
    const double dd = inner_product_E(d, d, shape.grid);
    if (dd == 0.0)
      throw Error(ErrorCode::internal, "sa_solve: zero direction with nonzero residual");
    const double rho = inner_product_E(r, g, shape.grid) / dd;
    x = project_onto_feasible(axpy(x, -cfg.gamma * rho, d), shape);
    alpha = alpha_next;
  }
  hist.final_point = std::move(x);
  hist.dnl_calls = dnl;
  hist.wall_seconds = clock.seconds();
  return hist;
}

inline IterateHistory sa_solve(const ExtendedPoint& x0, const Scenario& s,
                               const SolverConfig& cfg) {
  return sa_solve(x0, make_traffic_operator(s), s.shape(), cfg);
}

/// Conservative upper bound on the diameter of the discrete feasible set
/// under per-OD demand caps U: concentrating a whole demand into one step
/// bounds any flow cell by U/dt, giving
///   D = 2 * sqrt( sum_w [ U_w^2 + 2 * |P_w| * U_w^2 / dt ] ).
inline double diameter_from_caps(const ProblemShape& shape, const std::vector<double>& caps) {
  if (caps.size() != shape.n_od())
    throw Error(ErrorCode::dimension_mismatch, "diameter_from_caps: caps have wrong length");
  double acc = 0.0;
  for (std::size_t w = 0; w < caps.size(); ++w) {
    const double u2 = caps[w] * caps[w];
    acc += u2 + 2.0 * static_cast<double>(shape.od_paths[w].size()) * u2 / shape.grid.dt();
  }
  return 2.0 * std::sqrt(acc);
}

inline double diameter_estimate(const Scenario& s) {
  return diameter_from_caps(s.shape(), s.demand_bounds());
}

namespace detail {

struct InnerResult {
  ExtendedPoint point;
  OperatorValue anchor_value;  // F at the anchor, for per-iteration reporting
  int iterations = 0;
};

inline InnerResult ppm_inner(const ExtendedPoint& anchor, const VIOperator& op,
                             const ProblemShape& shape, const SolverConfig& cfg, long& dnl,
                             bool& budget_hit) {
  const double a = cfg.ppm_a;
  const double step = cfg.inner_alpha > 0.0 ? cfg.inner_alpha : 1.0 / (2.0 * a);
  InnerResult out;
  ExtendedPoint y = anchor;
  double best_gap = std::numeric_limits<double>::infinity();
  ExtendedPoint best = y;
  for (int j = 0; j < cfg.inner_max_iters; ++j) {
    if (dnl + 1 > cfg.max_dnl) {
      budget_hit = true;
      out.point = std::move(best);
      out.iterations = j;
      return out;
    }
    const OperatorValue fy = op(y);
    ++dnl;
    if (j == 0) out.anchor_value = fy;
    // regularized operator F(Y) + a (Y - anchor)
    OperatorValue reg = fy;
    {
      double* d = reg.psi.data();
      const double* yh = y.h.data();
      const double* ah = anchor.h.data();
      for (std::size_t i = 0; i < reg.psi.size(); ++i) d[i] += a * (yh[i] - ah[i]);
      for (std::size_t w = 0; w < reg.neg_theta.size(); ++w)
        reg.neg_theta[w] += a * (y.q[w] - anchor.q[w]);
    }
    const ExtendedPoint yn = project_onto_feasible(apply_step(y, -step, reg), shape);
    const double ny = std::max(norm_E(y, shape.grid), 1e-300);
    const double igap = norm_E(subtract(yn, y), shape.grid) / ny;
    y = yn;
    if (igap < best_gap) {
      best_gap = igap;
      best = y;
    }
    if (igap <= cfg.inner_tol) {
      out.point = std::move(y);
      out.iterations = j + 1;
      return out;
    }
  }
  throw InnerStallError("regularized inner solve missed tol " + std::to_string(cfg.inner_tol) +
                            " within " + std::to_string(cfg.inner_max_iters) +
                            " iterations (best relative gap " + std::to_string(best_gap) + ")",
                        std::move(best));
}

}  // namespace detail

/// Solves the regularized subproblem anchored at x_anchor: the fixed point of
/// Y <- P[Y - step (F(Y) + a (Y - x_anchor))], warm-started at the anchor.
inline ExtendedPoint ppm_inner_solve(const ExtendedPoint& x_anchor, const VIOperator& op,
                                     const ProblemShape& shape, const SolverConfig& cfg) {
  cfg.validate();
  long dnl = 0;
  bool budget_hit = false;
  auto res = detail::ppm_inner(x_anchor, op, shape, cfg, dnl, budget_hit);
  return res.point;
}

inline ExtendedPoint ppm_inner_solve(const ExtendedPoint& x_anchor, const Scenario& s,
                                     const SolverConfig& cfg) {
  return ppm_inner_solve(x_anchor, make_traffic_operator(s), s.shape(), cfg);
}

/// Proximal point method: a sequence of strongly regularized subproblems.
/// Two stopping rules run side by side and the history records which fired:
/// the displacement bound ||X^{k+1}-X^k|| <= delta/(a*D), whose certificate
/// a*D*||dX|| <= delta bounds the sampled dual gap from below by -delta, and
/// the plain relative gap between consecutive outer iterates.
inline IterateHistory ppm_solve(const ExtendedPoint& x0, const VIOperator& op,
                                const ProblemShape& shape, const SolverConfig& cfg,
                                double diameter) {
  cfg.validate();
  if (!(diameter > 0.0) || !std::isfinite(diameter))
    throw Error(ErrorCode::cannot_bound, "ppm_solve: feasible-set diameter must be finite and > 0");
  detail::Stopwatch clock;
  IterateHistory hist;
  ExtendedPoint x = x0;
  long dnl = 0;
  hist.reason = Termination::max_iters;
  const double disp_bound = cfg.ppm_delta / (cfg.ppm_a * diameter);
  for (int k = 0; k < cfg.max_iters; ++k) {
    bool budget_hit = false;
    auto inner = detail::ppm_inner(x, op, shape, cfg, dnl, budget_hit);
    if (budget_hit) {
      hist.reason = Termination::max_dnl;
      break;
    }
    const double disp = norm_E(subtract(inner.point, x), shape.grid);
    const double gap = disp / detail::checked_norm(x, shape.grid);
    hist.iterations.push_back({k, gap, x.q, od_average_cost(x, inner.anchor_value.psi, shape), dnl});
    hist.certificate = cfg.ppm_a * diameter * disp;
    x = std::move(inner.point);
    if (disp <= disp_bound) {
      hist.reason = Termination::converged;
      hist.fired_rule = "displacement_bound";
      break;
    }
    if (gap <= cfg.epsilon) {
      hist.reason = Termination::converged;
      hist.fired_rule = "relative_gap";
      break;
    }
  }
  hist.final_point = std::move(x);
  hist.dnl_calls = dnl;
  hist.wall_seconds = clock.seconds();
  return hist;
}

inline IterateHistory ppm_solve(const ExtendedPoint& x0, const Scenario& s,
                                const SolverConfig& cfg) {
  const double d = cfg.diameter ? *cfg.diameter : diameter_estimate(s);
  return ppm_solve(x0, make_traffic_operator(s), s.shape(), cfg, d);
}

inline IterateHistory solve(const ExtendedPoint& x0, const Scenario& s, const SolverConfig& cfg) {
  switch (cfg.method) {
    case SolveMethod::projection: return projection_solve(x0, s, cfg);
    case SolveMethod::self_adaptive: return sa_solve(x0, s, cfg);
    case SolveMethod::proximal_point: return ppm_solve(x0, s, cfg);
  }
  throw Error(ErrorCode::invalid_config, "unknown method");
}

}  // namespace edue
