#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "edue/core.hpp"
#include "edue/time_grid.hpp"

namespace edue {

/// Directed road segment with a triangular fundamental diagram.
/// Units: length km, speeds km/h, jam_density veh/km, flow_capacity veh/h.
struct Link {
  std::string id;
  std::string from;
  std::string to;
  double length = 0.0;
  double free_flow_speed = 0.0;
  double backward_wave_speed = 0.0;
  double jam_density = 0.0;
  double flow_capacity = 0.0;

  double free_flow_time() const { return length / free_flow_speed; }
  double backward_wave_time() const { return length / backward_wave_speed; }
  double storage() const { return jam_density * length; }
};

struct OdPair {
  std::string id;
  std::string origin;
  std::string destination;
};

struct Path {
  std::string id;
  std::string od;
  std::vector<std::string> link_ids;
  // resolved by Scenario::validate()
  std::vector<std::size_t> link_idx;
  std::size_t od_idx = 0;
};

/// Piecewise-linear schedule-deviation cost: f(x) = beta*max(0,-x) + gamma*max(0,x)
/// where x is arrival time minus the target, in hours. beta must stay below 1
/// (a unit of early arrival never costs more than a unit of travel time) and
/// gamma is nonnegative. Cost units are hour-equivalents throughout.
struct ArrivalPenalty {
  double target_arrival = 0.0;  // T_A (h)
  double early_slope = 0.0;     // beta, dimensionless
  double late_slope = 0.0;      // gamma, dimensionless

  double operator()(double arrival_offset) const {
    return early_slope * std::max(0.0, -arrival_offset) +
           late_slope * std::max(0.0, arrival_offset);
  }
};

/// Maps an OD demand vector Q (veh) to the equilibrium cost vector v
/// (hour-equivalents). The affine form v_w = a_w - b_w * Q_w is the one the
/// scenario format supports; custom() is the seam for general non-separable
/// maps, which the solver machinery never needs to special-case. Evaluation
/// is unclamped: large Q may yield negative costs.
class InverseDemand {
 public:
  InverseDemand() = default;

  static InverseDemand affine(std::vector<double> intercept, std::vector<double> slope) {
    if (intercept.size() != slope.size())
      throw Error(ErrorCode::dimension_mismatch, "inverse_demand: intercept/slope size mismatch");
    InverseDemand d;
    d.dim_ = intercept.size();
    d.intercept_ = std::move(intercept);
    d.slope_ = std::move(slope);
    return d;
  }

  static InverseDemand custom(std::function<std::vector<double>(const std::vector<double>&)> map,
                              std::size_t dim) {
    InverseDemand d;
    d.dim_ = dim;
    d.map_ = std::move(map);
    return d;
  }

  std::size_t dim() const { return dim_; }
  bool is_affine() const { return !map_; }
  const std::vector<double>& intercept() const { return intercept_; }
  const std::vector<double>& slope() const { return slope_; }

  std::vector<double> theta(const std::vector<double>& q) const {
    if (q.size() != dim_)
      throw Error(ErrorCode::dimension_mismatch, "inverse_demand: Q has wrong length");
    if (map_) return map_(q);
    std::vector<double> v(dim_);
    for (std::size_t w = 0; w < dim_; ++w) v[w] = intercept_[w] - slope_[w] * q[w];
    return v;
  }

  void validate() const {
    if (dim_ == 0) throw Error(ErrorCode::invalid_scenario, "inverse_demand: empty");
    if (!map_) {
      for (std::size_t w = 0; w < dim_; ++w) {
        if (!(intercept_[w] > 0.0) || !std::isfinite(intercept_[w]))
          throw Error(ErrorCode::invalid_scenario,
                      "inverse_demand.intercept[" + std::to_string(w) + "]: must be > 0");
        if (!(slope_[w] > 0.0) || !std::isfinite(slope_[w]))
          throw Error(ErrorCode::invalid_scenario,
                      "inverse_demand.slope[" + std::to_string(w) + "]: must be > 0");
      }
    }
  }

 private:
  std::size_t dim_ = 0;
  std::vector<double> intercept_;
  std::vector<double> slope_;
  std::function<std::vector<double>(const std::vector<double>&)> map_;
};

/// The structural skeleton a projection or inner product needs: the grid and
/// the grouping of path rows by OD pair. Synthetic operators in tests build
/// one directly; traffic problems get it from Scenario::shape().
struct ProblemShape {
  TimeGrid grid;
  std::vector<std::vector<std::size_t>> od_paths;  // per OD: indices of member paths

  std::size_t n_paths() const {
    std::size_t n = 0;
    for (const auto& g : od_paths) n += g.size();
    return n;
  }
  std::size_t n_od() const { return od_paths.size(); }
};

/// Immutable problem statement: network, utilized paths, OD pairs, demand
/// law, schedule penalty, and the time grid. validate() resolves identifier
/// references and enforces every structural invariant; operations assume a
/// validated scenario.
struct Scenario {
  std::string name;
  TimeGrid grid;
  std::vector<std::string> nodes;
  std::vector<Link> links;
  std::vector<OdPair> od_pairs;
  std::vector<Path> paths;
  InverseDemand inverse_demand;
  ArrivalPenalty penalty;
  std::optional<std::vector<double>> demand_caps;  // per-OD upper bounds (veh)

  // derived
  std::unordered_map<std::string, std::size_t> node_index;
  std::unordered_map<std::string, std::size_t> link_index;
  std::unordered_map<std::string, std::size_t> od_index;
  std::vector<std::vector<std::size_t>> od_paths;

  void validate() {
    grid.validate();
    if (nodes.empty()) throw Error(ErrorCode::invalid_scenario, "nodes: empty");
    if (links.empty()) throw Error(ErrorCode::invalid_scenario, "links: empty");
    if (od_pairs.empty()) throw Error(ErrorCode::invalid_scenario, "od_pairs: empty");
    if (paths.empty()) throw Error(ErrorCode::invalid_scenario, "paths: empty");

    node_index.clear();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (!node_index.emplace(nodes[i], i).second)
        throw Error(ErrorCode::invalid_scenario, "nodes[" + std::to_string(i) + "]: duplicate id '" + nodes[i] + "'");
    }

    link_index.clear();
    for (std::size_t i = 0; i < links.size(); ++i) {
      const Link& a = links[i];
      const std::string at = "links[" + std::to_string(i) + "] (" + a.id + ")";
      if (!link_index.emplace(a.id, i).second)
        throw Error(ErrorCode::invalid_scenario, at + ": duplicate id");
      if (!node_index.count(a.from))
        throw Error(ErrorCode::invalid_scenario, at + ".from: unknown node '" + a.from + "'");
      if (!node_index.count(a.to))
        throw Error(ErrorCode::invalid_scenario, at + ".to: unknown node '" + a.to + "'");
      auto positive = [&](double v, const char* field) {
        if (!(v > 0.0) || !std::isfinite(v))
          throw Error(ErrorCode::invalid_scenario, at + "." + field + ": must be finite and > 0");
      };
      positive(a.length, "length");
      positive(a.free_flow_speed, "free_flow_speed");
      positive(a.backward_wave_speed, "backward_wave_speed");
      positive(a.jam_density, "jam_density");
      positive(a.flow_capacity, "flow_capacity");
      if (a.backward_wave_speed > a.free_flow_speed)
        throw Error(ErrorCode::invalid_scenario,
                    at + ".backward_wave_speed: exceeds free_flow_speed");
      // triangular fundamental diagram: capacity at the apex
      const double apex = a.jam_density * a.free_flow_speed * a.backward_wave_speed /
                          (a.free_flow_speed + a.backward_wave_speed);
      if (a.flow_capacity > apex * (1.0 + 1e-12))
        throw Error(ErrorCode::invalid_scenario,
                    at + ".flow_capacity: inconsistent with triangular fundamental diagram (max " +
                        std::to_string(apex) + ")");
    }

    od_index.clear();
    for (std::size_t w = 0; w < od_pairs.size(); ++w) {
      const OdPair& od = od_pairs[w];
      const std::string at = "od_pairs[" + std::to_string(w) + "] (" + od.id + ")";
      if (!od_index.emplace(od.id, w).second)
        throw Error(ErrorCode::invalid_scenario, at + ": duplicate id");
      if (!node_index.count(od.origin))
        throw Error(ErrorCode::invalid_scenario, at + ".origin: unknown node '" + od.origin + "'");
      if (!node_index.count(od.destination))
        throw Error(ErrorCode::invalid_scenario, at + ".destination: unknown node '" + od.destination + "'");
    }

    od_paths.assign(od_pairs.size(), {});
    std::unordered_map<std::string, std::size_t> path_ids;
    for (std::size_t p = 0; p < paths.size(); ++p) {
      Path& path = paths[p];
      const std::string at = "paths[" + std::to_string(p) + "] (" + path.id + ")";
      if (!path_ids.emplace(path.id, p).second)
        throw Error(ErrorCode::invalid_scenario, at + ": duplicate id");
      auto od_it = od_index.find(path.od);
      if (od_it == od_index.end())
        throw Error(ErrorCode::invalid_scenario, at + ".od: unknown OD pair '" + path.od + "'");
      path.od_idx = od_it->second;
      if (path.link_ids.empty())
        throw Error(ErrorCode::invalid_scenario, at + ".links: empty");
      path.link_idx.clear();
      path.link_idx.reserve(path.link_ids.size());
      for (const auto& lid : path.link_ids) {
        auto it = link_index.find(lid);
        if (it == link_index.end())
          throw Error(ErrorCode::invalid_scenario, at + ".links: unknown link '" + lid + "'");
        path.link_idx.push_back(it->second);
      }
      for (std::size_t i = 0; i + 1 < path.link_idx.size(); ++i) {
        if (links[path.link_idx[i]].to != links[path.link_idx[i + 1]].from)
          throw Error(ErrorCode::invalid_scenario,
                      at + ".links: '" + path.link_ids[i] + "' and '" + path.link_ids[i + 1] +
                          "' are not head-to-tail adjacent");
      }
      const OdPair& od = od_pairs[path.od_idx];
      if (links[path.link_idx.front()].from != od.origin)
        throw Error(ErrorCode::invalid_scenario, at + ": first link does not start at OD origin");
      if (links[path.link_idx.back()].to != od.destination)
        throw Error(ErrorCode::invalid_scenario, at + ": last link does not end at OD destination");
      od_paths[path.od_idx].push_back(p);
    }
    for (std::size_t w = 0; w < od_paths.size(); ++w) {
      if (od_paths[w].empty())
        throw Error(ErrorCode::structural,
                    "od_pairs[" + std::to_string(w) + "] (" + od_pairs[w].id + "): has no paths");
    }

    if (inverse_demand.dim() != od_pairs.size())
      throw Error(ErrorCode::invalid_scenario, "inverse_demand: dimension != number of OD pairs");
    inverse_demand.validate();

    if (!(penalty.early_slope >= 0.0 && penalty.early_slope < 1.0))
      throw Error(ErrorCode::invalid_scenario,
                  "arrival_penalty.early_slope: must lie in [0, 1) so the marginal cost of "
                  "early arrival stays below the cost of travel time");
    if (!(penalty.late_slope >= 0.0))
      throw Error(ErrorCode::invalid_scenario, "arrival_penalty.late_slope: must be >= 0");
    if (!(penalty.target_arrival < grid.tf))
      throw Error(ErrorCode::invalid_scenario, "arrival_penalty.target_arrival: must precede tf");

    if (demand_caps) {
      if (demand_caps->size() != od_pairs.size())
        throw Error(ErrorCode::invalid_scenario, "demand_caps: size != number of OD pairs");
      for (std::size_t w = 0; w < demand_caps->size(); ++w)
        if (!((*demand_caps)[w] > 0.0) || !std::isfinite((*demand_caps)[w]))
          throw Error(ErrorCode::invalid_scenario,
                      "demand_caps[" + std::to_string(w) + "]: must be finite and > 0");
    }
  }

  ProblemShape shape() const { return ProblemShape{grid, od_paths}; }

  /// Per-OD demand bound used for diameter estimates: explicit caps if given,
  /// otherwise the demand at zero cost of the affine law.
  std::vector<double> demand_bounds() const {
    if (demand_caps) return *demand_caps;
    if (!inverse_demand.is_affine())
      throw Error(ErrorCode::cannot_bound,
                  "demand bound requires explicit demand_caps for non-affine inverse demand");
    std::vector<double> u(od_pairs.size());
    for (std::size_t w = 0; w < u.size(); ++w)
      u[w] = inverse_demand.intercept()[w] / inverse_demand.slope()[w];
    return u;
  }
};

}  // namespace edue
