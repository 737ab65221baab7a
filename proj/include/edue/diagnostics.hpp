#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "edue/core.hpp"
#include "edue/projection.hpp"
#include "edue/solvers.hpp"

namespace edue {

/// Flow-weighted average effective cost per OD pair; OD pairs with
/// nonpositive demand report NaN.
inline std::vector<double> average_travel_cost(const ExtendedPoint& x, const DelayField& field,
                                               const Scenario& s) {
  return od_average_cost(x, field.psi, s.shape());
}

/// Empirical picture of the operator's monotonicity over random feasible
/// pairs: the quotient <F(x1)-F(x2), x1-x2> / ||x1-x2||^2, its per-group
/// flow-block split when a path partition is supplied, and counted disproof
/// witnesses of pseudo and quasi monotonicity.
struct MonotonicityReport {
  int sample_count = 0;
  double min_quotient = 0.0;
  double mean_quotient = 0.0;
  // flow-block quotient restricted to the partition paths / the rest
  std::optional<double> partition_min_quotient;
  std::optional<double> complement_min_quotient;
  int pseudo_disproofs = 0;
  int quasi_disproofs = 0;
  std::string verdict;  // evidence-strong | evidence-weak-only | evidence-nonmonotone
};

namespace detail {

inline ExtendedPoint random_feasible(const ProblemShape& shape, const std::vector<double>& q_base,
                                     double noise_scale, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  ExtendedPoint x = uniform_start(shape, q_base);
  for (std::size_t w = 0; w < shape.od_paths.size(); ++w) {
    const double base =
        q_base[w] / (static_cast<double>(shape.od_paths[w].size()) * shape.grid.horizon());
    for (std::size_t p : shape.od_paths[w])
      for (auto& v : x.h.row(p)) v = std::max(0.0, v + noise_scale * base * unit(rng));
    x.q[w] = std::max(0.0, x.q[w] * (1.0 + 0.5 * noise_scale * unit(rng)));
  }
  return project_onto_feasible(x, shape);
}

}  // namespace detail

inline MonotonicityReport monotonicity_probe(const VIOperator& op, const ProblemShape& shape,
                                             const std::vector<double>& q_base, int samples,
                                             unsigned long long seed,
                                             const std::vector<std::size_t>* path_partition = nullptr) {
  if (samples < 2) throw Error(ErrorCode::domain_error, "monotonicity_probe: samples must be >= 2");
  std::mt19937_64 rng(seed);
  std::vector<bool> in_partition;
  if (path_partition) {
    in_partition.assign(shape.n_paths(), false);
    for (std::size_t p : *path_partition) in_partition[p] = true;
  }

  MonotonicityReport rep;
  rep.sample_count = samples;
  double min_q = std::numeric_limits<double>::infinity();
  double sum_q = 0.0;
  double min_part = std::numeric_limits<double>::infinity();
  double min_comp = std::numeric_limits<double>::infinity();
  const double dt = shape.grid.dt();

  for (int i = 0; i < samples; ++i) {
    const ExtendedPoint x1 = detail::random_feasible(shape, q_base, 0.1, rng);
    const ExtendedPoint x2 = detail::random_feasible(shape, q_base, 0.1, rng);
    const ExtendedPoint diff = subtract(x1, x2);
    const double nn = inner_product_E(diff, diff, shape.grid);
    if (nn < 1e-20) continue;
    const OperatorValue f1 = op(x1);
    const OperatorValue f2 = op(x2);
    const ExtendedPoint fdiff = subtract(f1.as_point(), f2.as_point());
    const double quot = inner_product_E(fdiff, diff, shape.grid) / nn;
    if (!std::isfinite(quot))
      throw Error(ErrorCode::internal, "monotonicity_probe: non-finite quotient");
    min_q = std::min(min_q, quot);
    sum_q += quot;

    if (path_partition) {
      double num_part = 0.0, den_part = 0.0, num_comp = 0.0, den_comp = 0.0;
      for (std::size_t p = 0; p < shape.n_paths(); ++p) {
        double num = 0.0, den = 0.0;
        for (std::size_t k = 0; k < diff.h.cols(); ++k) {
          num += fdiff.h(p, k) * diff.h(p, k);
          den += diff.h(p, k) * diff.h(p, k);
        }
        if (in_partition[p]) {
          num_part += num * dt;
          den_part += den * dt;
        } else {
          num_comp += num * dt;
          den_comp += den * dt;
        }
      }
      if (den_part > 1e-20) min_part = std::min(min_part, num_part / den_part);
      if (den_comp > 1e-20) min_comp = std::min(min_comp, num_comp / den_comp);
    }

    // disproof witnesses: premise holds at x2 but the conclusion fails at x1
    const double lhs = inner_product_E(f2.as_point(), diff, shape.grid);
    const double rhs = inner_product_E(f1.as_point(), diff, shape.grid);
    if (lhs >= 0.0 && rhs < 0.0) ++rep.pseudo_disproofs;
    if (lhs > 0.0 && rhs < 0.0) ++rep.quasi_disproofs;
  }

  rep.min_quotient = min_q;
  rep.mean_quotient = sum_q / samples;
  if (path_partition) {
    if (std::isfinite(min_part)) rep.partition_min_quotient = min_part;
    if (std::isfinite(min_comp)) rep.complement_min_quotient = min_comp;
  }
  if (rep.min_quotient > 0.0)
    rep.verdict = "evidence-strong";
  else if (rep.pseudo_disproofs == 0)
    rep.verdict = "evidence-weak-only";
  else
    rep.verdict = "evidence-nonmonotone";
  return rep;
}

/// Scenario probe: baseline demand is half the per-OD cap, perturbed by 10%
/// clipped noise and re-projected so every sample is feasible.
inline MonotonicityReport monotonicity_probe(const Scenario& s, int samples,
                                             unsigned long long seed,
                                             const std::vector<std::string>* partition_ids = nullptr) {
  std::vector<double> q_base = s.demand_bounds();
  for (auto& v : q_base) v *= 0.5;
  std::vector<std::size_t> partition;
  if (partition_ids) {
    std::unordered_map<std::string, std::size_t> path_index;
    for (std::size_t p = 0; p < s.paths.size(); ++p) path_index.emplace(s.paths[p].id, p);
    for (const auto& id : *partition_ids) {
      auto it = path_index.find(id);
      if (it == path_index.end())
        throw Error(ErrorCode::domain_error, "monotonicity_probe: unknown path id '" + id + "'");
      partition.push_back(it->second);
    }
  }
  return monotonicity_probe(make_traffic_operator(s), s.shape(), q_base, samples, seed,
                            partition_ids ? &partition : nullptr);
}

namespace detail {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

/// Writes the trace columns Figure-style plots need: iteration, relative
/// gap, per-OD demand and per-OD average cost, at full precision.
inline void gap_trace_export(const IterateHistory& hist, const std::string& path) {
  if (hist.iterations.empty())
    throw Error(ErrorCode::domain_error, "gap_trace_export: empty history");
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::io_error, "gap_trace_export: cannot open '" + path + "'");
  const std::size_t n_od = hist.iterations.front().q.size();
  os << "iteration,relative_gap";
  for (std::size_t w = 0; w < n_od; ++w) os << ",Q" << w;
  for (std::size_t w = 0; w < n_od; ++w) os << ",vbar" << w;
  os << '\n';
  for (const auto& rec : hist.iterations) {
    os << rec.k << ',' << detail::fmt17(rec.gap);
    for (double v : rec.q) os << ',' << detail::fmt17(v);
    for (double v : rec.avg_cost) os << ',' << detail::fmt17(v);
    os << '\n';
  }
  if (!os) throw Error(ErrorCode::io_error, "gap_trace_export: write failed for '" + path + "'");
}

}  // namespace edue
