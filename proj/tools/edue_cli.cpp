// Command-line front end: batch equilibrium solves, scenario validation,
// standalone network loading, operator probes, and run comparison.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "edue/edue.hpp"

namespace {

edue::SolveMethod parse_method(const std::string& name) {
  if (name == "projection" || name == "pm") return edue::SolveMethod::projection;
  if (name == "self_adaptive" || name == "sa") return edue::SolveMethod::self_adaptive;
  if (name == "proximal_point" || name == "pp") return edue::SolveMethod::proximal_point;
  throw edue::Error(edue::ErrorCode::invalid_config,
                    "unknown method '" + name + "' (projection | self_adaptive | proximal_point)");
}

edue::PathFlow read_flow_csv(const std::string& path, std::size_t n_paths, std::size_t n_steps) {
  std::ifstream is(path);
  if (!is) throw edue::Error(edue::ErrorCode::io_error, "cannot open flow profile '" + path + "'");
  edue::PathFlow h(n_paths, n_steps);
  std::string line;
  std::size_t row = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (row >= n_paths)
      throw edue::Error(edue::ErrorCode::io_error, "flow profile has more rows than paths");
    std::stringstream ss(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(ss, cell, ',')) {
      if (col >= n_steps)
        throw edue::Error(edue::ErrorCode::io_error,
                          "flow profile row " + std::to_string(row) + " has too many columns");
      h(row, col) = std::stod(cell);
      ++col;
    }
    if (col != n_steps)
      throw edue::Error(edue::ErrorCode::io_error,
                        "flow profile row " + std::to_string(row) + " has " + std::to_string(col) +
                            " columns, expected " + std::to_string(n_steps));
    ++row;
  }
  if (row != n_paths)
    throw edue::Error(edue::ErrorCode::io_error, "flow profile has " + std::to_string(row) +
                                                     " rows, expected " + std::to_string(n_paths));
  return h;
}

int cmd_solve(const edue::RunSpec& spec) {
  auto res = edue::run(spec);
  const auto& hist = res.history;
  std::cout << "method=" << edue::to_string(spec.config.method)
            << " termination=" << edue::to_string(hist.reason)
            << " iterations=" << hist.iterations.size() << " dnl_calls=" << hist.dnl_calls
            << " wall_seconds=" << hist.wall_seconds << '\n';
  if (!hist.iterations.empty())
    std::cout << "final_gap=" << hist.iterations.back().gap << '\n';
  std::cout << "artifacts written to " << spec.out_dir << '\n';
  return res.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic user equilibrium with elastic demand"};
  app.require_subcommand(1);

  // solve
  auto* solve = app.add_subcommand("solve", "run one solver on a scenario");
  edue::RunSpec spec;
  std::string method_name = "projection";
  solve->add_option("scenario", spec.scenario_path, "scenario JSON file")->required();
  solve->add_option("--method", method_name, "projection | self_adaptive | proximal_point");
  solve->add_option("--out", spec.out_dir, "output directory")->required();
  solve->add_option("--alpha", spec.config.alpha, "projection step length");
  solve->add_option("--epsilon", spec.config.epsilon, "termination threshold");
  solve->add_option("--q0", spec.initial_demand, "initial demand per OD pair (veh)");
  solve->add_option("--max-iters", spec.config.max_iters, "iteration budget");
  solve->add_option("--max-dnl", spec.config.max_dnl, "network-loading budget");
  solve->add_option("--mu", spec.config.mu, "self-adaptive backtracking factor");
  solve->add_option("--gamma", spec.config.gamma, "self-adaptive relaxation factor");
  solve->add_option("--theta", spec.config.theta, "self-adaptive step growth factor");
  solve->add_option("--line-l", spec.config.line_L, "self-adaptive line-search bound");
  solve->add_option("--ppm-a", spec.config.ppm_a, "proximal regularization weight");
  solve->add_option("--ppm-delta", spec.config.ppm_delta, "proximal certificate tolerance");
  solve->add_option("--inner-tol", spec.config.inner_tol, "proximal inner relative gap");
  solve->add_option("--inner-max-iters", spec.config.inner_max_iters, "proximal inner budget");
  solve->add_option("--seed", spec.seed, "seed recorded in the summary");
  solve->add_flag("--dump-curves", spec.dump_curves, "dump cumulative curves of the final point");
  solve->add_flag("--dump-gap-trace", spec.dump_gap_trace, "dump the plot-ready gap trace");

  // validate
  auto* validate = app.add_subcommand("validate", "parse and validate a scenario file");
  std::string validate_path;
  validate->add_option("scenario", validate_path, "scenario JSON file")->required();

  // load
  auto* load = app.add_subcommand("load", "network loading only: flow profile in, delays out");
  std::string load_scenario, load_profile, load_out;
  bool load_dump_curves = false;
  load->add_option("scenario", load_scenario, "scenario JSON file")->required();
  load->add_option("--flows", load_profile,
                   "CSV departure-rate matrix, one row per path, one column per step")
      ->required();
  load->add_option("--out", load_out, "output CSV for the delay field")->required();
  load->add_flag("--dump-curves", load_dump_curves, "also write cumulative curves next to --out");

  // probe
  auto* probe = app.add_subcommand("probe", "sample the operator's monotonicity quotient");
  std::string probe_scenario, probe_partition;
  int probe_samples = 100;
  unsigned long long probe_seed = 1;
  std::string probe_out;
  probe->add_option("scenario", probe_scenario, "scenario JSON file")->required();
  probe->add_option("--samples", probe_samples, "number of random feasible pairs");
  probe->add_option("--seed", probe_seed, "RNG seed");
  probe->add_option("--partition", probe_partition, "comma-separated path ids");
  probe->add_option("--out", probe_out, "write the report JSON here instead of stdout");

  // compare
  auto* compare = app.add_subcommand("compare", "tabulate run summaries side by side");
  std::vector<std::string> summaries;
  compare->add_option("summaries", summaries, "summary.json files")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) {
      spec.config.method = parse_method(method_name);
      return cmd_solve(spec);
    }
    if (validate->parsed()) {
      edue::Scenario s = edue::parse_scenario(validate_path);
      std::cout << "ok: " << (s.name.empty() ? validate_path : s.name) << " — " << s.nodes.size()
                << " nodes, " << s.links.size() << " links, " << s.od_pairs.size()
                << " OD pairs, " << s.paths.size() << " paths, " << s.grid.n_steps
                << " steps of " << s.grid.dt() << " h\n";
      return 0;
    }
    if (load->parsed()) {
      edue::Scenario s = edue::parse_scenario(load_scenario);
      edue::PathFlow h =
          read_flow_csv(load_profile, s.paths.size(), static_cast<std::size_t>(s.grid.n_steps));
      edue::LoadResult res = edue::load_network(h, s);
      edue::Matrix psi = edue::effective_delay(res.depart_delay, s.penalty, s.grid);
      std::ofstream os(load_out);
      if (!os) throw edue::Error(edue::ErrorCode::io_error, "cannot open '" + load_out + "'");
      os << "path,step,depart_time,travel_time,effective_delay\n";
      char buf[40];
      for (std::size_t p = 0; p < s.paths.size(); ++p)
        for (int k = 0; k < s.grid.n_steps; ++k) {
          os << s.paths[p].id << ',' << k;
          std::snprintf(buf, sizeof(buf), "%.17g", s.grid.time(k));
          os << ',' << buf;
          std::snprintf(buf, sizeof(buf), "%.17g", res.depart_delay(p, k));
          os << ',' << buf;
          std::snprintf(buf, sizeof(buf), "%.17g", psi(p, k));
          os << ',' << buf << '\n';
        }
      if (load_dump_curves) {
        std::ofstream cs(load_out + ".curves.csv");
        edue::dump_curves(res, s, cs);
      }
      std::cout << "delay field written to " << load_out << '\n';
      return 0;
    }
    if (probe->parsed()) {
      edue::Scenario s = edue::parse_scenario(probe_scenario);
      std::vector<std::string> ids;
      if (!probe_partition.empty()) {
        std::stringstream ss(probe_partition);
        std::string id;
        while (std::getline(ss, id, ',')) ids.push_back(id);
      }
      edue::MonotonicityReport rep =
          edue::monotonicity_probe(s, probe_samples, probe_seed, ids.empty() ? nullptr : &ids);
      nlohmann::json j{{"samples", rep.sample_count},
                       {"min_quotient", rep.min_quotient},
                       {"mean_quotient", rep.mean_quotient},
                       {"pseudo_disproofs", rep.pseudo_disproofs},
                       {"quasi_disproofs", rep.quasi_disproofs},
                       {"verdict", rep.verdict}};
      if (rep.partition_min_quotient) j["partition_min_quotient"] = *rep.partition_min_quotient;
      if (rep.complement_min_quotient) j["complement_min_quotient"] = *rep.complement_min_quotient;
      if (probe_out.empty()) {
        std::cout << j.dump(2) << '\n';
      } else {
        std::ofstream os(probe_out);
        os << j.dump(2) << '\n';
      }
      return 0;
    }
    if (compare->parsed()) {
      std::cout << edue::compare_runs(summaries);
      return 0;
    }
  } catch (const edue::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
  return 1;
}
