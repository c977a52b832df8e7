// ranassure command line: scenario runner, run comparison and coefficient
// calibration for the two-cell traffic-steering experiment.
//
//   ranassure run --scenario scenarios/surge_drift.json --mode agentic --out out/agentic
//   ranassure compare out/baseline out/no-agent out/agentic --out out/cmp
//   ranassure calibrate --targets scenarios/target_aggregates.json --out fitted.json

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "ranassure/runner.hpp"

using namespace ranassure;

namespace {

constexpr int kExitValidation = 2;

int do_run(const std::string& scenario_path, const std::string& mode_str,
           std::int64_t seed_override, const std::string& out_dir, bool wire) {
  RunMode mode;
  if (mode_str == "baseline")
    mode = RunMode::Baseline;
  else if (mode_str == "no-agent" || mode_str == "no_agent")
    mode = RunMode::NoAgent;
  else if (mode_str == "agentic")
    mode = RunMode::Agentic;
  else {
    std::cerr << "unknown mode: " << mode_str << " (expected baseline|no-agent|agentic)\n";
    return kExitValidation;
  }
  ScenarioConfig scenario = load_scenario(scenario_path);
  if (seed_override >= 0) scenario.seed = static_cast<std::uint64_t>(seed_override);
  auto artifacts = cmd_run(scenario, mode, out_dir, wire);
  const auto& r = artifacts.report;
  std::printf("run complete: %s mode=%s seed=%llu (%.2f s)\n", scenario.name.c_str(),
              r.mode.c_str(), static_cast<unsigned long long>(r.seed), r.runtime_seconds);
  for (const auto& [cell, a] : r.eval) {
    std::printf("  %s eval: rrc %.1f  thr %.2f Mbps  prb %.4f  p95 %.4f  sinr %.2f dB\n",
                cell.c_str(), a.mean_rrc, a.mean_thr, a.mean_prb, a.p95_prb, a.mean_sinr);
  }
  if (r.deployment.value("deployed", false))
    std::printf("  deployment: %s\n",
                r.deployment["policy"].value("policy_id", std::string("?")).c_str());
  else if (r.deployment.value("refused", false))
    std::printf("  deployment refused; rationale in decisions.jsonl\n");
  else
    std::printf("  no deployment event\n");
  std::printf("  artifacts in %s\n", out_dir.c_str());
  return 0;
}

int do_compare(const std::vector<std::string>& dirs, const std::string& out_dir) {
  auto table = cmd_compare(dirs, out_dir);
  std::fputs(table.c_str(), stdout);
  std::printf("comparison written to %s\n", out_dir.c_str());
  return 0;
}

int do_calibrate(const std::string& targets_path, const std::string& out_scenario,
                 const std::string& base_scenario) {
  CalibrationTargets targets;
  {
    std::ifstream in(targets_path);
    if (!in) {
      std::cerr << "cannot open targets file: " << targets_path << "\n";
      return kExitValidation;
    }
    targets = CalibrationTargets::from_json(nlohmann::json::parse(in));
  }
  ScenarioConfig scenario =
      base_scenario.empty() ? make_reference_scenario(true) : load_scenario(base_scenario);
  auto res = cmd_calibrate(targets, scenario);
  std::fputs(res.report.c_str(), stdout);
  save_scenario(scenario, out_scenario);
  std::printf("fitted scenario written to %s\n", out_scenario.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-cell RAN simulator with a thirteen-agent assurance pipeline"};
  app.require_subcommand(1);

  std::string scenario_path, mode = "agentic", out_dir = "out", targets_path, base_scenario;
  std::int64_t seed_override = -1;
  bool wire = false;
  std::vector<std::string> compare_dirs;

  auto* run = app.add_subcommand("run", "run one scenario in one mode");
  run->add_option("--scenario", scenario_path, "scenario JSON file")->required();
  run->add_option("--mode", mode, "baseline | no-agent | agentic");
  run->add_option("--seed", seed_override, "override the scenario seed");
  run->add_option("--out", out_dir, "output directory")->required();
  run->add_flag("--wire", wire, "route agent messages over the NDJSON stream transport");

  auto* cmp = app.add_subcommand("compare", "compare two or more run directories");
  cmp->add_option("dirs", compare_dirs, "run directories")->expected(-2);
  cmp->add_option("--out", out_dir, "output directory for the comparison");

  auto* cal = app.add_subcommand("calibrate", "fit cell coefficients to aggregate targets");
  cal->add_option("--targets", targets_path, "aggregate targets JSON")->required();
  cal->add_option("--out", out_dir, "output scenario file")->required();
  cal->add_option("--base", base_scenario, "base scenario to refit (default: built-in reference)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return do_run(scenario_path, mode, seed_override, out_dir, wire);
    if (cmp->parsed()) return do_compare(compare_dirs, out_dir);
    if (cal->parsed()) return do_calibrate(targets_path, out_dir, base_scenario);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
