#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "edue/diagnostics.hpp"
#include "edue/scenario_io.hpp"
#include "edue/solvers.hpp"

namespace edue {

/// One batch solve: scenario, solver configuration, output directory, dump
/// toggles. The seed is recorded in the summary; solves themselves are
/// deterministic, so a fixed spec reproduces its artifacts byte for byte.
struct RunSpec {
  std::string scenario_path;
  SolverConfig config;
  std::string out_dir;
  double initial_demand = 1000.0;  // Q0 per OD pair, spread uniformly
  bool dump_curves = false;
  bool dump_gap_trace = false;
  unsigned long long seed = 0;
};

namespace detail {

inline void atomic_write(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw Error(ErrorCode::io_error, "cannot open '" + tmp + "' for writing");
    os << content;
    if (!os) throw Error(ErrorCode::io_error, "write failed for '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

inline std::string history_csv(const IterateHistory& hist) {
  std::ostringstream os;
  const std::size_t n_od = hist.iterations.empty() ? 0 : hist.iterations.front().q.size();
  os << "iteration,relative_gap";
  for (std::size_t w = 0; w < n_od; ++w) os << ",Q" << w;
  for (std::size_t w = 0; w < n_od; ++w) os << ",vbar" << w;
  os << ",dnl_calls\n";
  for (const auto& rec : hist.iterations) {
    os << rec.k << ',' << fmt17(rec.gap);
    for (double v : rec.q) os << ',' << fmt17(v);
    for (double v : rec.avg_cost) os << ',' << fmt17(v);
    os << ',' << rec.dnl_calls << '\n';
  }
  return os.str();
}

inline nlohmann::json violation_json(const ViolationReport& rep, const Scenario& s) {
  nlohmann::json per_od = nlohmann::json::array();
  for (std::size_t w = 0; w < rep.ref_cost.size(); ++w) {
    nlohmann::json o{{"od", s.od_pairs[w].id},
                     {"ref_cost", rep.ref_cost[w]},
                     {"max_deficit", rep.max_deficit[w]}};
    if (std::isfinite(rep.used_spread[w]))
      o["used_spread"] = rep.used_spread[w];
    else
      o["used_spread"] = nullptr;
    per_od.push_back(std::move(o));
  }
  return nlohmann::json{{"per_od", per_od},
                        {"merit", rep.merit},
                        {"max_deficit", rep.max_deficit_all},
                        {"max_used_spread", rep.max_used_spread_all}};
}

inline nlohmann::json point_json(const ExtendedPoint& x) {
  nlohmann::json h = nlohmann::json::array();
  for (std::size_t p = 0; p < x.h.rows(); ++p) {
    nlohmann::json row = nlohmann::json::array();
    for (double v : x.h.row(p)) row.push_back(v);
    h.push_back(std::move(row));
  }
  return nlohmann::json{{"h", std::move(h)}, {"q", x.q}};
}

}  // namespace detail

struct RunResult {
  int exit_code = 0;  // 0 converged, 2 max_iters, 3 max_dnl, 4 error
  IterateHistory history;
};

/// Executes the selected solver and writes the artifact set into out_dir:
/// history.csv, final_point.json, violation.json, summary.json, plus the
/// optional curve and gap-trace dumps. Files are written whole and renamed
/// into place. The exit code mirrors the termination reason.
inline RunResult run(const RunSpec& spec) {
  Scenario scenario = parse_scenario(spec.scenario_path);
  std::filesystem::create_directories(spec.out_dir);
  const auto artifact = [&](const char* name) {
    return (std::filesystem::path(spec.out_dir) / name).string();
  };

  RunResult res;
  try {
    const ExtendedPoint x0 = uniform_start(scenario, spec.initial_demand);
    res.history = solve(x0, scenario, spec.config);
    const IterateHistory& hist = res.history;

    const ViolationReport violation = equilibrium_violation(hist.final_point, scenario);

    nlohmann::json summary{
        {"scenario", scenario.name},
        {"scenario_path", spec.scenario_path},
        {"method", to_string(spec.config.method)},
        {"termination", to_string(hist.reason)},
        {"iterations", hist.iterations.size()},
        {"dnl_calls", hist.dnl_calls},
        {"wall_seconds", hist.wall_seconds},
        {"epsilon", spec.config.epsilon},
        {"seed", spec.seed},
        {"final_gap", hist.iterations.empty() ? 0.0 : hist.iterations.back().gap},
        {"final_q", hist.final_point.q},
        {"merit", violation.merit},
        {"max_deficit", violation.max_deficit_all},
        {"max_used_spread", violation.max_used_spread_all},
    };
    if (spec.config.method == SolveMethod::proximal_point) {
      summary["certificate"] = hist.certificate;
      summary["fired_rule"] = hist.fired_rule;
    }

    detail::atomic_write(artifact("history.csv"), detail::history_csv(hist));
    detail::atomic_write(artifact("final_point.json"), detail::point_json(hist.final_point).dump(2) + "\n");
    detail::atomic_write(artifact("violation.json"),
                         detail::violation_json(violation, scenario).dump(2) + "\n");
    detail::atomic_write(artifact("summary.json"), summary.dump(2) + "\n");
    if (spec.dump_gap_trace) gap_trace_export(res.history, artifact("gap_trace.csv"));
    if (spec.dump_curves) {
      std::ostringstream os;
      dump_curves(load_network(hist.final_point.h, scenario), scenario, os);
      detail::atomic_write(artifact("curves.csv"), os.str());
    }

    switch (hist.reason) {
      case Termination::converged: res.exit_code = 0; break;
      case Termination::max_iters: res.exit_code = 2; break;
      case Termination::max_dnl: res.exit_code = 3; break;
      case Termination::error: res.exit_code = 4; break;
    }
    return res;
  } catch (const Error& e) {
    nlohmann::json err{{"error", to_string(e.code())}, {"message", e.what()}};
    detail::atomic_write(artifact("error.json"), err.dump(2) + "\n");
    res.exit_code = 4;
    throw;
  }
}

/// Side-by-side table of run summaries (fixed column order: Method,
/// Iterations, DNL calls, Wall time). All summaries must come from the same
/// scenario.
inline std::string compare_runs(const std::vector<std::string>& summary_paths) {
  if (summary_paths.size() < 2)
    throw Error(ErrorCode::domain_error, "compare_runs: need at least two summaries");
  struct Row {
    std::string method;
    long iterations;
    long dnl;
    double seconds;
  };
  std::vector<Row> rows;
  std::string scenario;
  for (const auto& path : summary_paths) {
    std::ifstream is(path);
    if (!is) throw Error(ErrorCode::io_error, "cannot open summary '" + path + "'");
    nlohmann::json j;
    try {
      is >> j;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::io_error, "summary '" + path + "': " + e.what());
    }
    const std::string sc = j.value("scenario", std::string());
    if (scenario.empty())
      scenario = sc;
    else if (sc != scenario)
      throw Error(ErrorCode::domain_error,
                  "compare_runs: summaries mix scenarios ('" + scenario + "' vs '" + sc + "')");
    rows.push_back({j.at("method").get<std::string>(), j.at("iterations").get<long>(),
                    j.at("dnl_calls").get<long>(), j.at("wall_seconds").get<double>()});
  }
  std::ostringstream os;
  os << "scenario: " << scenario << '\n';
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-16s %12s %12s %12s\n", "method", "iterations", "dnl_calls",
                "seconds");
  os << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-16s %12ld %12ld %12.2f\n", r.method.c_str(), r.iterations,
                  r.dnl, r.seconds);
    os << buf;
  }
  return os.str();
}

}  // namespace edue
