// femtoq: command-line driver for the femtocell power-control simulator.

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "femtoq/oracle.hpp"
#include "femtoq/report.hpp"
#include "femtoq/scenario.hpp"
#include "femtoq/simulator.hpp"

namespace fs = std::filesystem;
using namespace femtoq;

namespace {

struct Outputs {
  fs::path dir;
  bool plot = false;
  unsigned oracle_threads = 1;
};

RunSummary execute(const Scenario& sc, const Outputs& out, const std::string& stem) {
  const auto start = std::chrono::steady_clock::now();
  RunResult result = run(sc.config, sc.schedule);
  std::optional<OracleResult> oracle;
  std::optional<PolicyValue> greedy;
  if (sc.oracle) {
    oracle = exhaustive_optimal(result.final_state, {.threads = out.oracle_threads});
    greedy = greedy_policy_value(result.final_state);
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  RunSummary s = summarize(sc, result, wall);
  s.oracle = oracle;
  if (greedy) {
    s.greedy_femto = greedy->report.total_femto;
    s.greedy_in_band = greedy->in_band;
  }

  const std::size_t k = sc.config.subcarrier_count();
  write_trace_csv(out.dir / (stem + ".csv"), result.trace, k);
  detail::write_file(out.dir / (stem + ".summary.txt"), format_summary(s));
  if (out.plot) {
    const auto scope = sc.config.target_scope();
    ChartOptions macro{.title = stem + ": macro capacity",
                       .y_label = scope == TargetScope::Aggregate ? "aggregate macro capacity" : "macro capacity, k=1",
                       .band = std::pair{result.target - sc.config.band, result.target + sc.config.band}};
    detail::write_file(out.dir / (stem + "_macro.svg"), render_svg({macro_series(result.trace, scope)}, macro));
    ChartOptions femto{
        .title = stem + ": aggregate femto capacity", .y_label = "aggregate femto capacity", .band = std::nullopt};
    detail::write_file(out.dir / (stem + "_femto.svg"), render_svg({femto_series(result.trace)}, femto));
  }
  return s;
}

std::pair<std::uint64_t, std::uint64_t> parse_seed_range(const std::string& text) {
  const auto dots = text.find("..");
  try {
    if (dots == std::string::npos) {
      const auto v = std::stoull(text);
      return {v, v};
    }
    const auto a = std::stoull(text.substr(0, dots));
    const auto b = std::stoull(text.substr(dots + 2));
    if (b < a) throw ConfigError("seed range " + text + " is empty");
    return {a, b};
  } catch (const std::logic_error&) {
    throw ConfigError("bad seed range '" + text + "' (expected a..b)");
  }
}

int cmd_run(const std::string& path, std::optional<std::uint64_t> seed, const Outputs& out) {
  Scenario sc = load_scenario(path);
  if (seed) sc.config.seed = *seed;
  const RunSummary s = execute(sc, out, sc.name);
  std::cout << format_summary(s);
  return 0;
}

int cmd_sweep(const std::string& path, const std::string& range, unsigned jobs, const Outputs& out) {
  const Scenario base = load_scenario(path);
  const auto [first, last] = parse_seed_range(range);
  const std::size_t count = static_cast<std::size_t>(last - first + 1);
  std::vector<std::optional<RunSummary>> summaries(count);
  std::vector<std::string> errors(count);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      Scenario sc = base;
      sc.config.seed = first + i;
      try {
        summaries[i] = execute(sc, out, sc.name + "_seed" + std::to_string(sc.config.seed));
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned j = 0; j < std::max(1U, jobs); ++j) pool.emplace_back(worker);
  }

  std::string table = "seed,converged,final_window_femto,in_band_fraction,total_messages,oracle_femto,greedy_femto\n";
  int status = 0;
  for (std::size_t i = 0; i < count; ++i) {
    if (!summaries[i]) {
      std::cerr << "seed " << first + i << ": " << errors[i] << "\n";
      status = 2;
      continue;
    }
    const RunSummary& s = *summaries[i];
    table += std::to_string(s.seed) + "," + (s.converged ? "1" : "0") + "," + detail::sig9(s.final_window_femto) +
             "," + detail::sig9(s.in_band_fraction) + "," + std::to_string(s.total_messages) + "," +
             (s.oracle && s.oracle->feasible ? detail::sig9(s.oracle->best_total_femto) : "") + "," +
             (s.greedy_femto ? detail::sig9(*s.greedy_femto) : "") + "\n";
  }
  detail::write_file(out.dir / (base.name + "_sweep.csv"), table);
  std::cout << table;
  return status;
}

int cmd_oracle(const std::string& path, std::optional<std::uint64_t> seed, const Outputs& out) {
  Scenario sc = load_scenario(path);
  if (seed) sc.config.seed = *seed;
  auto [topology, topo_rng] = sample_topology(sc.config);
  const Simulation sim(sc.config, std::move(topology), topo_rng);
  const OracleResult r = exhaustive_optimal(sim, {.threads = out.oracle_threads});
  std::cout << "target = " << detail::sig9(sim.target()) << "\n";
  std::cout << "evaluated = " << r.evaluated_count << "\n";
  std::cout << "feasible_count = " << r.feasible_count << "\n";
  if (!r.feasible) {
    std::cerr << "no allocation keeps the macro capacity within the target band\n";
    return 2;
  }
  std::cout << "oracle_femto = " << detail::sig9(r.best_total_femto) << "\n";
  std::cout << "oracle_macro = " << detail::sig9(r.best_macro_aggregate) << "\n";
  for (std::size_t n = 0; n < r.best_allocation_dbm.size(); ++n) {
    std::cout << "femto_" << n << "_dbm =";
    for (double p : r.best_allocation_dbm[n]) std::cout << " " << detail::sig9(p);
    std::cout << "\n";
  }
  return 0;
}

int cmd_preset(const std::string& name, std::optional<std::uint64_t> seed, bool emit_only, const Outputs& out) {
  const auto scenarios = preset_scenarios(name, seed.value_or(1));
  std::string table = "scenario,algorithm,paradigm,n_femto,converged,final_window_femto,oracle_femto,greedy_femto\n";
  for (const auto& sc : scenarios) {
    detail::write_file(out.dir / (sc.name + ".scenario"), serialize_scenario(sc));
    if (emit_only) continue;
    std::cerr << "running " << sc.name << "\n";
    const RunSummary s = execute(sc, out, sc.name);
    table += sc.name + "," + s.algorithm + "," + s.paradigm + "," + std::to_string(s.final_femtos) + "," +
             (s.converged ? "1" : "0") + "," + detail::sig9(s.final_window_femto) + "," +
             (s.oracle && s.oracle->feasible ? detail::sig9(s.oracle->best_total_femto) : "") + "," +
             (s.greedy_femto ? detail::sig9(*s.greedy_femto) : "") + "\n";
  }
  if (!emit_only) {
    detail::write_file(out.dir / (name + ".csv"), table);
    std::cout << table;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Q-learning power control for cognitive femtocell networks"};
  app.require_subcommand(1);

  const char* env_out = std::getenv("FEMTOQ_OUT");
  std::string out_dir = env_out ? env_out : ".";
  std::optional<std::uint64_t> seed;
  bool plot = false;
  unsigned threads = 1;
  app.add_option("--out", out_dir, "output directory (default $FEMTOQ_OUT or .)");
  app.add_option("--seed", seed, "override the scenario seed");
  app.add_flag("--plot", plot, "write SVG charts next to the CSV traces");
  app.add_option("--oracle-threads", threads, "worker threads for exhaustive search")->check(CLI::PositiveNumber);

  std::string scenario_path;
  auto* run_cmd = app.add_subcommand("run", "run one experiment");
  run_cmd->add_option("scenario", scenario_path)->required();

  std::string seeds;
  unsigned jobs = 1;
  auto* sweep_cmd = app.add_subcommand("sweep", "run one experiment per seed");
  sweep_cmd->add_option("scenario", scenario_path)->required();
  sweep_cmd->add_option("--seeds", seeds, "seed range a..b")->required();
  sweep_cmd->add_option("--jobs", jobs, "concurrent replications")->check(CLI::PositiveNumber);

  auto* oracle_cmd = app.add_subcommand("oracle", "exhaustive search on the scenario's initial topology");
  oracle_cmd->add_option("scenario", scenario_path)->required();

  std::string preset;
  bool emit_only = false;
  auto* preset_cmd = app.add_subcommand("preset", "run a canonical protocol at desk scale");
  preset_cmd->add_option("name", preset)->required()->check(CLI::IsMember({"fig1a", "fig2", "fig3"}));
  preset_cmd->add_flag("--emit-only", emit_only, "write the scenario files without running them");

  for (auto* sub : {run_cmd, sweep_cmd, oracle_cmd, preset_cmd}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  const Outputs out{out_dir, plot, threads};
  try {
    if (*run_cmd) return cmd_run(scenario_path, seed, out);
    if (*sweep_cmd) return cmd_sweep(scenario_path, seeds, jobs, out);
    if (*oracle_cmd) return cmd_oracle(scenario_path, seed, out);
    if (*preset_cmd) return cmd_preset(preset, seed, emit_only, out);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
