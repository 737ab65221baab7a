#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "edue/core.hpp"
#include "edue/network.hpp"

namespace edue {

namespace detail {

using nlohmann::json;

inline const json& member(const json& j, const std::string& key, const std::string& at) {
  if (!j.is_object())
    throw Error(ErrorCode::io_error, at + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw Error(ErrorCode::io_error, at + "." + key + ": missing");
  return *it;
}

inline double number(const json& j, const std::string& key, const std::string& at) {
  const json& v = member(j, key, at);
  if (!v.is_number()) throw Error(ErrorCode::io_error, at + "." + key + ": expected a number");
  return v.get<double>();
}

inline std::string str(const json& j, const std::string& key, const std::string& at) {
  const json& v = member(j, key, at);
  if (!v.is_string()) throw Error(ErrorCode::io_error, at + "." + key + ": expected a string");
  return v.get<std::string>();
}

}  // namespace detail

/// Builds a Scenario from its JSON document form. Validation runs before
/// returning, so schema errors and structural violations both surface with
/// field-path context.
inline Scenario scenario_from_json(const nlohmann::json& j) {
  using detail::member;
  using detail::number;
  using detail::str;
  Scenario s;
  if (j.contains("name")) s.name = j.at("name").get<std::string>();

  const auto& grid = member(j, "grid", "scenario");
  s.grid.t0 = number(grid, "t0", "grid");
  s.grid.tf = number(grid, "tf", "grid");
  {
    const auto& ns = member(grid, "n_steps", "grid");
    if (!ns.is_number_integer()) throw Error(ErrorCode::io_error, "grid.n_steps: expected an integer");
    s.grid.n_steps = ns.get<int>();
  }

  const auto& nodes = member(j, "nodes", "scenario");
  if (!nodes.is_array() ) throw Error(ErrorCode::io_error, "nodes: expected an array");
  for (const auto& n : nodes) s.nodes.push_back(n.get<std::string>());

  const auto& links = member(j, "links", "scenario");
  if (!links.is_array()) throw Error(ErrorCode::io_error, "links: expected an array");
  for (std::size_t i = 0; i < links.size(); ++i) {
    const std::string at = "links[" + std::to_string(i) + "]";
    Link a;
    a.id = str(links[i], "id", at);
    a.from = str(links[i], "from", at);
    a.to = str(links[i], "to", at);
    a.length = number(links[i], "length", at);
    a.free_flow_speed = number(links[i], "free_flow_speed", at);
    a.backward_wave_speed = number(links[i], "backward_wave_speed", at);
    a.jam_density = number(links[i], "jam_density", at);
    a.flow_capacity = number(links[i], "flow_capacity", at);
    s.links.push_back(std::move(a));
  }

  const auto& ods = member(j, "od_pairs", "scenario");
  if (!ods.is_array()) throw Error(ErrorCode::io_error, "od_pairs: expected an array");
  for (std::size_t w = 0; w < ods.size(); ++w) {
    const std::string at = "od_pairs[" + std::to_string(w) + "]";
    s.od_pairs.push_back({str(ods[w], "id", at), str(ods[w], "origin", at),
                          str(ods[w], "destination", at)});
  }

  const auto& paths = member(j, "paths", "scenario");
  if (!paths.is_array()) throw Error(ErrorCode::io_error, "paths: expected an array");
  for (std::size_t p = 0; p < paths.size(); ++p) {
    const std::string at = "paths[" + std::to_string(p) + "]";
    Path path;
    path.id = str(paths[p], "id", at);
    path.od = str(paths[p], "od", at);
    const auto& hops = member(paths[p], "links", at);
    if (!hops.is_array()) throw Error(ErrorCode::io_error, at + ".links: expected an array");
    for (const auto& l : hops) path.link_ids.push_back(l.get<std::string>());
    s.paths.push_back(std::move(path));
  }

  const auto& dem = member(j, "inverse_demand", "scenario");
  const std::string kind = str(dem, "type", "inverse_demand");
  if (kind != "affine")
    throw Error(ErrorCode::io_error,
                "inverse_demand.type: only 'affine' is supported in scenario files");
  std::vector<double> intercept, slope;
  for (const auto& v : member(dem, "intercept", "inverse_demand")) intercept.push_back(v.get<double>());
  for (const auto& v : member(dem, "slope", "inverse_demand")) slope.push_back(v.get<double>());
  s.inverse_demand = InverseDemand::affine(std::move(intercept), std::move(slope));

  const auto& pen = member(j, "arrival_penalty", "scenario");
  s.penalty.target_arrival = number(pen, "target_arrival", "arrival_penalty");
  s.penalty.early_slope = number(pen, "early_slope", "arrival_penalty");
  s.penalty.late_slope = number(pen, "late_slope", "arrival_penalty");

  if (j.contains("demand_caps")) {
    std::vector<double> caps;
    for (const auto& v : j.at("demand_caps")) caps.push_back(v.get<double>());
    s.demand_caps = std::move(caps);
  }

  s.validate();
  return s;
}

inline Scenario parse_scenario(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::io_error, "cannot open scenario file '" + path + "'");
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::io_error, "scenario file '" + path + "': " + e.what());
  }
  return scenario_from_json(j);
}

inline nlohmann::json scenario_to_json(const Scenario& s) {
  nlohmann::json j;
  if (!s.name.empty()) j["name"] = s.name;
  j["grid"] = {{"t0", s.grid.t0}, {"tf", s.grid.tf}, {"n_steps", s.grid.n_steps}};
  j["nodes"] = s.nodes;
  j["links"] = nlohmann::json::array();
  for (const auto& a : s.links)
    j["links"].push_back({{"id", a.id},
                          {"from", a.from},
                          {"to", a.to},
                          {"length", a.length},
                          {"free_flow_speed", a.free_flow_speed},
                          {"backward_wave_speed", a.backward_wave_speed},
                          {"jam_density", a.jam_density},
                          {"flow_capacity", a.flow_capacity}});
  j["od_pairs"] = nlohmann::json::array();
  for (const auto& od : s.od_pairs)
    j["od_pairs"].push_back({{"id", od.id}, {"origin", od.origin}, {"destination", od.destination}});
  j["paths"] = nlohmann::json::array();
  for (const auto& p : s.paths)
    j["paths"].push_back({{"id", p.id}, {"od", p.od}, {"links", p.link_ids}});
  if (!s.inverse_demand.is_affine())
    throw Error(ErrorCode::io_error, "scenario_to_json: only affine inverse demand is serializable");
  j["inverse_demand"] = {{"type", "affine"},
                         {"intercept", s.inverse_demand.intercept()},
                         {"slope", s.inverse_demand.slope()}};
  j["arrival_penalty"] = {{"target_arrival", s.penalty.target_arrival},
                          {"early_slope", s.penalty.early_slope},
                          {"late_slope", s.penalty.late_slope}};
  if (s.demand_caps) j["demand_caps"] = *s.demand_caps;
  return j;
}

}  // namespace edue
