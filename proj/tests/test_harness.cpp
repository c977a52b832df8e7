#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ranassure/runner.hpp"

using namespace ranassure;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::size_t count_occurrences(const std::string& hay, const std::string& needle) {
  std::size_t n = 0, pos = 0;
  while ((pos = hay.find(needle, pos)) != std::string::npos) {
    ++n;
    pos += needle.size();
  }
  return n;
}

// One shared baseline run; cmd_run is expensive because the figures need all
// three mode traces.
const RunArtifacts& baseline_run() {
  static const RunArtifacts arts = [] {
    fs::remove_all("harness_out/base");
    return cmd_run(make_reference_scenario(true), RunMode::Baseline, "harness_out/base");
  }();
  return arts;
}

}  // namespace

TEST_CASE("cmd_calibrate solves the coefficient set from the aggregate pairs") {
  CalibrationTargets t;  // defaults carry the reported reference values
  auto scenario = make_reference_scenario(true);
  auto res = cmd_calibrate(t, scenario);
  CHECK(res.prb_per_ue == doctest::Approx(0.003833).epsilon(1e-3));
  CHECK(res.efficiency == doctest::Approx(0.900).epsilon(1e-2));
  CHECK(res.sinr_slope == doctest::Approx(15.6).epsilon(1e-2));
  CHECK(scenario.cells[0].params.prb_per_ue == doctest::Approx(res.prb_per_ue));
  // the neighbor aggregates cannot be reconciled; the report says so
  CHECK(!res.consistent);
  CHECK(res.report.find("inconsistent") != std::string::npos);
}

TEST_CASE("cmd_run writes the full artifact set") {
  const auto& arts = baseline_run();
  for (const char* name : {"telemetry.csv", "decisions.jsonl", "audit.jsonl", "report.md",
                           "run.json", "scenario.json", "fig_rrc.svg", "fig_thr_mbps.svg",
                           "fig_prb.svg", "fig_sinr_db.svg"}) {
    CHECK(fs::exists(fs::path("harness_out/base") / name));
  }
  CHECK(arts.report.mode == "baseline");
  CHECK(arts.report.runtime_seconds < 10.0);
}

TEST_CASE("figures are well-formed and carry exactly three traces") {
  baseline_run();
  for (const char* name : {"fig_rrc.svg", "fig_thr_mbps.svg", "fig_prb.svg", "fig_sinr_db.svg"}) {
    auto svg = slurp(std::string("harness_out/base/") + name);
    CHECK(svg.rfind("<?xml", 0) == 0);
    CHECK(count_occurrences(svg, "<polyline") == 3);
    CHECK(count_occurrences(svg, "<svg") == count_occurrences(svg, "</svg>"));
    CHECK(svg.find("baseline") != std::string::npos);
    CHECK(svg.find("no_agent") != std::string::npos);
    CHECK(svg.find("agentic") != std::string::npos);
  }
}

TEST_CASE("report aggregates are recomputable from the csv alone") {
  const auto& arts = baseline_run();
  auto log = load_telemetry_csv("harness_out/base/telemetry.csv");
  auto cfg = load_scenario("harness_out/base/scenario.json");
  for (const auto& c : cfg.cells) {
    auto fresh = aggregates_over(log.cell_series(c.cell_id), cfg.eval_start, cfg.eval_end);
    const auto& stored = arts.report.eval.at(c.cell_id);
    CHECK(fresh.mean_rrc == doctest::Approx(stored.mean_rrc));
    CHECK(fresh.mean_prb == doctest::Approx(stored.mean_prb).epsilon(1e-4));
    CHECK(fresh.mean_thr == doctest::Approx(stored.mean_thr).epsilon(1e-4));
  }
}

TEST_CASE("comparing a run with itself gives zero deltas") {
  baseline_run();
  auto table = cmd_compare({"harness_out/base", "harness_out/base"}, "harness_out/cmp_self");
  CHECK(table.find("+0.0%") != std::string::npos);
  CHECK(fs::exists("harness_out/cmp_self/compare.md"));
  CHECK(fs::exists("harness_out/cmp_self/compare_prb.svg"));
}

TEST_CASE("compare refuses mismatched scenarios") {
  baseline_run();
  fs::remove_all("harness_out/other");
  auto other = make_reference_scenario(false);  // different scenario (no drift)
  cmd_run(other, RunMode::Baseline, "harness_out/other");
  CHECK_THROWS_AS(cmd_compare({"harness_out/base", "harness_out/other"}, "harness_out/cmp_bad"),
                  std::invalid_argument);
}

TEST_CASE("compare needs at least two runs") {
  CHECK_THROWS_AS(cmd_compare({"harness_out/base"}, "harness_out/cmp_one"),
                  std::invalid_argument);
}
