#pragma once

#include <cmath>

#include "edue/core.hpp"

namespace edue {

/// Uniform discretization of the analysis horizon [t0, tf] into n_steps
/// intervals. Times are in hours. The step width is derived, never stored,
/// so dt * n_steps == tf - t0 holds by construction. All time integrals in
/// this library use the left-endpoint rule on this grid: a per-step value
/// v[k] represents the constant value on [time(k), time(k+1)).
struct TimeGrid {
  double t0 = 0.0;
  double tf = 1.0;
  int n_steps = 1;

  double dt() const { return (tf - t0) / static_cast<double>(n_steps); }
  double time(int k) const { return t0 + k * dt(); }
  double horizon() const { return tf - t0; }

  void validate() const {
    if (!(tf > t0)) throw Error(ErrorCode::invalid_scenario, "grid: tf must exceed t0");
    if (n_steps < 1) throw Error(ErrorCode::invalid_scenario, "grid: n_steps must be >= 1");
    if (!std::isfinite(t0) || !std::isfinite(tf))
      throw Error(ErrorCode::invalid_scenario, "grid: bounds must be finite");
  }

  friend bool operator==(const TimeGrid& a, const TimeGrid& b) {
    return a.t0 == b.t0 && a.tf == b.tf && a.n_steps == b.n_steps;
  }
};

}  // namespace edue
