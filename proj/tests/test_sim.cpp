#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "ranassure/sim.hpp"

using namespace ranassure;

namespace {

ScenarioConfig quiet_reference(bool with_drift = true) {
  auto s = make_reference_scenario(with_drift);
  // Golden-path checks run with noise and jitter off.
  s.load_jitter = LoadJitter{};
  for (auto& c : s.cells) c.params.noise_sd = NoiseSd{};
  return s;
}

}  // namespace

TEST_CASE("surge_extra profile") {
  SurgeProfile p;
  p.cell_id = "cellA";
  CHECK(surge_extra(p, 99) == 0);
  CHECK(surge_extra(p, 0) == 0);
  CHECK(surge_extra(p, 140) == 90);
  CHECK(surge_extra(p, 155) == 55);
  CHECK(surge_extra(p, 170) == 20);
  CHECK(surge_extra(p, 239) == 20);
  // ramp midpoint
  CHECK(surge_extra(p, 120) == 45);
}

TEST_CASE("offload arithmetic") {
  OffloadDirective d;
  d.policy_id = "p1";
  d.source_cell = "cellA";
  d.target_cell = "cellB";
  d.fraction = 0.2;
  d.active_from = 100;
  d.ttl_min = 30;

  std::map<std::string, CellState> states;
  states["cellA"].rrc_users = 210;
  states["cellB"].rrc_users = 80;

  SUBCASE("moves a fraction of the excess") {
    apply_offload(states, d, 100, 120);
    CHECK(states["cellA"].rrc_users == 192);
    CHECK(states["cellB"].rrc_users == 98);
  }

  SUBCASE("no excess moves zero") {
    states["cellA"].rrc_users = 120;
    apply_offload(states, d, 100, 120);
    CHECK(states["cellA"].rrc_users == 120);
    CHECK(states["cellB"].rrc_users == 80);
  }

  SUBCASE("zero fraction is identity") {
    d.fraction = 0.0;
    apply_offload(states, d, 100, 120);
    CHECK(states["cellA"].rrc_users == 210);
    CHECK(states["cellB"].rrc_users == 80);
  }

  SUBCASE("inactive directive is a no-op") {
    apply_offload(states, d, 99, 120);
    CHECK(states["cellA"].rrc_users == 210);
    apply_offload(states, d, 130, 120);
    CHECK(states["cellA"].rrc_users == 210);
  }

  SUBCASE("fraction bounds enforced") {
    d.fraction = 0.6;
    CHECK_THROWS_AS(d.validate(), std::invalid_argument);
  }
}

TEST_CASE("step_minute initial attachment and drift application") {
  auto cfg = quiet_reference();
  Simulation sim(cfg);
  auto first = sim.step_minute(0);
  REQUIRE(first.size() == 2);
  CHECK(first[0].cell_id == "cellA");
  CHECK(first[0].rrc_users == 120);
  CHECK(first[1].rrc_users == 80);

  for (Minute t = 1; t < 138; ++t) sim.step_minute(t);
  auto at138 = sim.step_minute(138);
  // Drifted neighbor: prb = 0.15 + 80 * prb_per_ue / 0.6
  const double expect = 0.15 + 80 * 0.00483 / 0.6;
  CHECK(at138[1].prb_util == doctest::Approx(expect));
  CHECK(at138[1].sinr_db == doctest::Approx(25.0 - 15.0 * expect - 2.0));

  CHECK_THROWS_AS(sim.step_minute(0), std::logic_error);
}

TEST_CASE("no controller, no drift, no noise: trapezoid trace") {
  auto cfg = quiet_reference(false);
  auto out = run_scenario(cfg);
  REQUIRE(out.completed);
  auto target = out.log.cell_series("cellA");
  REQUIRE(static_cast<int>(target.size()) == cfg.duration_min);
  for (Minute t = 0; t < cfg.duration_min; ++t) {
    CHECK(target[t].rrc_users == 120 + surge_extra(cfg.surge, t));
  }
}

TEST_CASE("baseline eval-window mean rrc lands near the calibration anchor") {
  auto cfg = quiet_reference();
  auto out = run_scenario(cfg);
  REQUIRE(out.completed);
  auto target = out.log.cell_series("cellA");
  double sum = 0;
  for (Minute t = cfg.eval_start; t <= cfg.eval_end; ++t) sum += target[t].rrc_users;
  double mean = sum / (cfg.eval_end - cfg.eval_start + 1);
  CHECK(mean == doctest::Approx(175.1).epsilon(8.0 / 175.1));
}

TEST_CASE("fixed controller deploying f=0.33 at t=140 lands near the reported anchor") {
  auto cfg = quiet_reference();
  auto controller = [](Minute t, const std::vector<KpiSample>&, Simulation& sim) {
    if (t == 139) {
      OffloadDirective d;
      d.policy_id = "fixed";
      d.source_cell = "cellA";
      d.target_cell = "cellB";
      d.fraction = 0.33;
      d.active_from = 140;
      d.ttl_min = 30;
      sim.install_directive(d);
    }
  };
  auto out = run_scenario(cfg, controller);
  REQUIRE(out.completed);
  auto target = out.log.cell_series("cellA");
  double sum = 0;
  for (Minute t = 140; t <= 169; ++t) sum += target[t].rrc_users;
  double mean = sum / 30.0;
  CHECK(std::abs(mean - 157.0) <= 8.0);
}

TEST_CASE("determinism: same config and seed give identical telemetry") {
  auto cfg = make_reference_scenario();
  auto a = run_scenario(cfg);
  auto b = run_scenario(cfg);
  REQUIRE(a.completed);
  REQUIRE(b.completed);
  CHECK(telemetry_to_csv(a.log) == telemetry_to_csv(b.log));
}

TEST_CASE("user conservation holds with jitter and offload") {
  auto cfg = make_reference_scenario();
  auto controller = [](Minute t, const std::vector<KpiSample>&, Simulation& sim) {
    if (t == 139) {
      OffloadDirective d;
      d.policy_id = "fixed";
      d.source_cell = "cellA";
      d.target_cell = "cellB";
      d.fraction = 0.4;
      d.active_from = 140;
      d.ttl_min = 30;
      sim.install_directive(d);
    }
  };
  auto out = run_scenario(cfg, controller);
  REQUIRE(out.completed);
  const int total0 = 200;
  for (Minute t = 0; t < cfg.duration_min; ++t) {
    int sum = out.log.samples[2 * t].rrc_users + out.log.samples[2 * t + 1].rrc_users;
    CHECK(sum == total0 + surge_extra(cfg.surge, t));
  }
}

TEST_CASE("controller never deploying equals no controller") {
  auto cfg = make_reference_scenario();
  auto idle = [](Minute, const std::vector<KpiSample>&, Simulation&) {};
  auto a = run_scenario(cfg);
  auto b = run_scenario(cfg, idle);
  CHECK(telemetry_to_csv(a.log) == telemetry_to_csv(b.log));
}

TEST_CASE("controller failure aborts run with partial log") {
  auto cfg = quiet_reference();
  auto bomb = [](Minute t, const std::vector<KpiSample>&, Simulation&) {
    if (t == 50) throw std::runtime_error("boom");
  };
  auto out = run_scenario(cfg, bomb);
  CHECK(!out.completed);
  CHECK(out.error.find("t=50") != std::string::npos);
  CHECK(out.log.samples.size() == 2 * 51);
}

TEST_CASE("csv round trip reproduces identical samples") {
  auto cfg = make_reference_scenario();
  cfg.duration_min = 40;
  cfg.eval_start = 10;
  cfg.eval_end = 20;
  auto out = run_scenario(cfg);
  REQUIRE(out.completed);
  std::string csv = telemetry_to_csv(out.log);
  std::istringstream in(csv);
  auto back = telemetry_from_csv(in);
  CHECK(telemetry_to_csv(back) == csv);
}

TEST_CASE("load jitter is mean-free over the reporting anchor windows") {
  auto cfg = make_reference_scenario();
  for (Minute start : {110, 140}) {
    long long sum = 0;
    for (Minute t = start; t < start + 30; ++t)
      sum += load_jitter_exchange(cfg.load_jitter, cfg.seed, t);
    // Integer rounding leaves at most a few users of residue.
    CHECK(std::abs(sum) <= 15);
  }
}
