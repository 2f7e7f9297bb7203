// Command line front end: scenario simulation, static validation and the
// brute-force certification sweeps.

#include <CLI11.hpp>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "steer/errors.hpp"
#include "steer/oracle.hpp"
#include "steer/scenario.hpp"

namespace {

int run_simulate(const std::string& config_path, const std::string& output_dir,
                 bool best_effort, bool seed_set, std::uint64_t seed) {
  steer::ScenarioConfig cfg = steer::load_scenario(config_path);
  if (best_effort) cfg.best_effort = true;
  if (seed_set) {
    if (cfg.x0.mode == steer::X0Spec::Mode::kUniform)
      cfg.x0.seed = seed;
    else
      std::cerr << "warning: --seed ignored, x0 mode is not uniform\n";
  }

  const steer::RunArtifacts artifacts = steer::run_scenario(cfg, output_dir);
  for (const std::string& w : artifacts.trace.warnings)
    std::cerr << "warning: " << w << "\n";
  std::cout << "trace:    " << artifacts.trace_csv.string() << "\n";
  for (const auto& p : artifacts.figure_csv)
    std::cout << "figure:   " << p.string() << "\n";
  std::cout << "manifest: " << artifacts.manifest.string() << "\n";

  const int n = artifacts.trace.horizon();
  std::cout << "steps: " << n
            << "  V_0: " << artifacts.trace.leader_value.front()
            << "  V_" << n - 1 << ": " << artifacts.trace.leader_value.back()
            << "\n";
  return 0;
}

int run_validate(const std::string& config_path) {
  const steer::ScenarioConfig cfg = steer::load_scenario(config_path);
  const steer::ValidationReport report = steer::validate_scenario(cfg);
  for (const auto& check : report.checks) {
    std::cout << (check.ok ? "PASS  " : "FAIL  ") << check.name;
    if (!check.ok && !check.detail.empty()) std::cout << " — " << check.detail;
    std::cout << "\n";
  }
  return report.all_ok() ? 0 : 1;
}

int run_oracle(const std::string& subcase, std::uint64_t seed, int instances,
               double resolution, const std::string& output_file) {
  using namespace steer::oracle;
  if (subcase == "qp") {
    std::vector<int> sizes;
    for (int i = 0; i < instances; ++i) sizes.push_back(1 + i % 3);
    const QpSweepResult sweep = run_qp_sweep(seed, sizes, resolution);
    for (std::size_t i = 0; i < sweep.records.size(); ++i) {
      const QpSweepRecord& r = sweep.records[i];
      std::cout << "instance " << i << "  n=" << r.size << "  solver "
                << r.solver_objective << "  grid " << r.oracle_objective
                << "  kkt " << r.kkt_residual << "\n";
    }
    std::cout << "max grid-minus-solver gap: " << sweep.max_gap
              << "\nmax solver overshoot:      " << sweep.max_overshoot
              << "\nmax kkt residual:          " << sweep.max_kkt << "\n";
    return 0;
  }
  if (subcase == "dp") {
    const DpSweepResult sweep =
        run_dp_sweep(seed, instances, steer::S12Variant::kStateClosedLoop);
    for (std::size_t i = 0; i < sweep.records.size(); ++i) {
      const DpSweepRecord& r = sweep.records[i];
      std::cout << "instance " << i << "  dims=" << r.dims << "  closed-loop "
                << r.closed_loop << "  grid " << r.oracle_objective
                << "  gap bound " << r.gap_bound
                << (r.within_bound ? "  ok" : "  VIOLATED") << "\n";
    }
    std::cout << (sweep.all_within ? "all instances within the gap bound\n"
                                   : "gap bound violated\n");
    return sweep.all_within ? 0 : 1;
  }
  if (subcase == "adjudicate") {
    const auto report =
        adjudicate_s12_variants(make_adjudication_instances(seed, instances));
    const std::string text = report.to_text();
    std::cout << text;
    if (!output_file.empty()) {
      std::ofstream os(output_file, std::ios::binary);
      if (!os) throw steer::IOError("cannot write " + output_file);
      os << text;
    }
    return report.winner_matches_oracle ? 0 : 1;
  }
  std::cerr << "unknown oracle subcase \"" << subcase
            << "\" (expected qp, dp or adjudicate)\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"opinion steering via a per-step leader/follower game"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  bool best_effort = false;
  std::uint64_t seed = 0;

  CLI::App* sim = app.add_subcommand(
      "simulate", "run a scenario and write the csv artifacts");
  sim->add_option("config", config_path, "scenario or manifest json file")
      ->required();
  sim->add_option("--output-dir", output_dir,
                  "override the configured output directory");
  sim->add_flag("--best-effort", best_effort,
                "accept non-converged steps and mark them in the trace");
  CLI::Option* seed_opt =
      sim->add_option("--seed", seed, "override the x0 seed (uniform mode)");

  CLI::App* val =
      app.add_subcommand("validate", "run the static checks and report them");
  val->add_option("config", config_path, "scenario or manifest json file")
      ->required();

  CLI::App* orc =
      app.add_subcommand("oracle", "brute-force certification sweeps");
  std::string subcase;
  std::uint64_t oracle_seed = 1;
  int instances = 20;
  double resolution = 1e-3;
  std::string output_file;
  orc->add_option("subcase", subcase, "qp | dp | adjudicate")->required();
  orc->add_option("--seed", oracle_seed, "instance generator seed");
  orc->add_option("--instances", instances, "number of instances");
  orc->add_option("--resolution", resolution, "qp grid resolution");
  orc->add_option("--output", output_file, "also write the report here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed())
      return run_simulate(config_path, output_dir, best_effort,
                          seed_opt->count() > 0, seed);
    if (val->parsed()) return run_validate(config_path);
    if (orc->parsed())
      return run_oracle(subcase, oracle_seed, instances, resolution,
                        output_file);
  } catch (const steer::FixedPointDivergence& e) {
    std::cerr << "solver did not converge: " << e.what() << "\n";
    std::cerr << "|dy|_inf history:";
    for (double d : e.delta_history) std::cerr << ' ' << d;
    std::cerr << "\n(rerun with --best-effort to keep the last iterate)\n";
    return 2;
  } catch (const steer::IOError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 3;
  } catch (const steer::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
