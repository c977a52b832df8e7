#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ranassure/assure.hpp"
#include "ranassure/sim.hpp"

using namespace ranassure;

namespace {

ForecastSet flat_forecast(const std::string& cell, double prb, double rrc) {
  ForecastSet fc;
  fc.cell_id = cell;
  fc.t_origin = 139;
  fc.model_id = "m1";
  for (int step = 0; step < kForecastHorizon; ++step) {
    std::array<double, kKpiCount> row{rrc, 50.0, prb, 14.0};
    fc.point.push_back(row);
    fc.lo.push_back(row);
    fc.hi.push_back(row);
  }
  return fc;
}

GuardrailConfig guardrails() { return GuardrailConfig{}; }

// Noiseless telemetry straight from the closed-form physics.
std::vector<KpiSample> physics_series(const std::string& cell, int rrc_from, int rrc_to,
                                      double prb_per_ue, double cap_factor, double offset) {
  CellParams params;
  params.prb_per_ue = prb_per_ue;
  params.capacity_mbps = 150.0;
  std::vector<KpiSample> out;
  Minute t = 0;
  const int step = rrc_to >= rrc_from ? 1 : -1;
  for (int rrc = rrc_from; rrc != rrc_to + step; rrc += step) {
    CellState st;
    st.rrc_users = rrc;
    st.cap_factor = cap_factor;
    st.prb_base_offset = offset;
    out.push_back(evaluate_kpis(cell, t++, st, params, 0));
  }
  return out;
}

}  // namespace

TEST_CASE("generate_policy fraction from overshoot") {
  auto cfg = guardrails();
  SUBCASE("maxPRB 0.93 maps to f 0.325") {
    auto p = generate_policy(flat_forecast("cellA", 0.93, 150), cfg, 120, "cellB", 140, 30);
    REQUIRE(p.has_value());
    CHECK(p->directive.fraction == doctest::Approx(0.325));
    CHECK(p->directive.source_cell == "cellA");
    CHECK(p->directive.target_cell == "cellB");
  }
  SUBCASE("maxPRB exactly at the trigger yields no policy") {
    auto p = generate_policy(flat_forecast("cellA", 0.80, 150), cfg, 120, "cellB", 140, 30);
    CHECK(!p.has_value());
  }
  SUBCASE("clamped at fraction_max") {
    auto p = generate_policy(flat_forecast("cellA", 1.20, 260), cfg, 120, "cellB", 140, 30);
    REQUIRE(p.has_value());
    CHECK(p->directive.fraction == doctest::Approx(0.5));
  }
  SUBCASE("rrc trigger alone cannot produce a positive fraction") {
    auto p = generate_policy(flat_forecast("cellA", 0.70, 170), cfg, 120, "cellB", 140, 30);
    CHECK(!p.has_value());
  }
}

TEST_CASE("fit_local_model recovers the generating slope exactly on noiseless data") {
  auto series = physics_series("cellB", 80, 120, 0.004, 1.0, 0.0);
  auto m = fit_local_model(series, "cellB", 0.001);
  CHECK(std::abs(m.prb_per_ue_eff - 0.004) < 1e-9);
  CHECK(std::abs(m.prb_floor) < 1e-9);
  CHECK(!m.degenerate);
  CHECK(m.resid_sd < 1e-9);
}

TEST_CASE("fit_local_model sees drift through the effective slope") {
  auto series = physics_series("cellB", 80, 120, 0.004, 0.6, 0.15);
  auto m = fit_local_model(series, "cellB", 0.001);
  CHECK(m.prb_per_ue_eff == doctest::Approx(0.004 / 0.6).epsilon(1e-9));
  CHECK(m.prb_floor == doctest::Approx(0.15).epsilon(1e-6));
}

TEST_CASE("constant-rrc window falls back to the prior slope") {
  auto series = physics_series("cellB", 80, 80, 0.004, 1.0, 0.0);
  while (series.size() < 12) {
    auto s = series.back();
    s.t_min += 1;
    series.push_back(s);
  }
  auto m = fit_local_model(series, "cellB", 0.0042);
  CHECK(m.degenerate);
  CHECK(m.prb_per_ue_eff == doctest::Approx(0.0042));
}

TEST_CASE("simulate_policy identity and drift arithmetic") {
  // Build local models from physics telemetry around the reference scenario.
  auto source_series = physics_series("cellA", 170, 208, 0.00383, 1.0, 0.0);
  auto cfgA = fit_local_model(source_series, "cellA", 0.00383);

  Policy policy;
  policy.policy_id = "p";
  policy.directive.policy_id = "p";
  policy.directive.source_cell = "cellA";
  policy.directive.target_cell = "cellB";
  policy.directive.fraction = 0.325;
  policy.directive.active_from = 140;
  policy.directive.ttl_min = 30;

  SUBCASE("zero fraction equals the no-action projection") {
    auto nb = physics_series("cellB", 70, 90, 0.00483, 1.0, 0.0);
    auto cfgB = fit_local_model(nb, "cellB", 0.00483);
    Policy idle = policy;
    idle.directive.fraction = 0.0;
    auto sim = simulate_policy(idle, cfgA, cfgB, 120);
    for (std::size_t i = 0; i < sim.source.size(); ++i) {
      CHECK(sim.source[i].prb == doctest::Approx(sim.source_no_action[i].prb));
      CHECK(sim.target[i].rrc == cfgB.last_rrc);
    }
  }

  SUBCASE("drifted neighbor projects above the guardrail") {
    auto nb = physics_series("cellB", 70, 80, 0.00483, 0.6, 0.15);
    auto cfgB = fit_local_model(nb, "cellB", 0.00483);
    auto sim = simulate_policy(policy, cfgA, cfgB, 120);
    double peak = 0;
    for (const auto& p : sim.target) peak = std::max(peak, p.prb);
    CHECK(peak > 0.85);
  }

  SUBCASE("undrifted neighbor stays below the guardrail") {
    auto nb = physics_series("cellB", 70, 80, 0.00483, 1.0, 0.0);
    auto cfgB = fit_local_model(nb, "cellB", 0.00483);
    auto sim = simulate_policy(policy, cfgA, cfgB, 120);
    double peak = 0;
    for (const auto& p : sim.target) peak = std::max(peak, p.prb);
    CHECK(peak < 0.85);
  }
}

TEST_CASE("verify_policy decisions") {
  auto cfg = guardrails();
  Policy policy;
  policy.policy_id = "p1";
  policy.directive.source_cell = "cellA";
  policy.directive.target_cell = "cellB";
  policy.directive.fraction = 0.3;
  policy.directive.ttl_min = 5;

  auto make_sim = [](double nb_prb, double nb_sinr, double src_with, double src_without) {
    SimulatedTrajectories sim;
    sim.source_cell = "cellA";
    sim.target_cell = "cellB";
    sim.target_resid_sd = 0.01;
    for (int i = 0; i < 5; ++i) {
      sim.target.push_back({100, nb_prb, nb_sinr, 20.0});
      sim.source.push_back({180, src_with, 14.0, 60.0});
      sim.source_no_action.push_back({208, src_without, 13.0, 55.0});
    }
    return sim;
  };
  auto fc = flat_forecast("cellB", 0.50, 100);

  SUBCASE("neighbor peak over the limit is rejected with the failing check") {
    auto v = verify_policy(policy, fc, make_sim(0.87, 12.0, 0.62, 0.80), cfg);
    CHECK(v.decision == VerdictDecision::Rejected);
    bool found = false;
    for (const auto& c : v.checks)
      if (c.name == "neighbor_prb_max" && !c.pass && c.value == doctest::Approx(0.87))
        found = true;
    CHECK(found);
    CHECK(!v.rationale.empty());
  }

  SUBCASE("exactly at the limit still rejects: the bound is strict") {
    auto v = verify_policy(policy, fc, make_sim(0.85, 12.0, 0.62, 0.80), cfg);
    CHECK(v.decision == VerdictDecision::Rejected);
  }

  SUBCASE("all clear approves") {
    auto v = verify_policy(policy, fc, make_sim(0.55, 12.0, 0.62, 0.80), cfg);
    CHECK(v.decision == VerdictDecision::Approved);
    CHECK(v.all_checks_pass());
  }

  SUBCASE("low neighbor sinr rejects") {
    auto v = verify_policy(policy, fc, make_sim(0.55, 4.0, 0.62, 0.80), cfg);
    CHECK(v.decision == VerdictDecision::Rejected);
  }

  SUBCASE("no target improvement rejects") {
    auto v = verify_policy(policy, fc, make_sim(0.55, 12.0, 0.81, 0.80), cfg);
    CHECK(v.decision == VerdictDecision::Rejected);
  }

  SUBCASE("approved iff all checks pass, over every outcome combination") {
    for (double nb_prb : {0.55, 0.87})
      for (double nb_sinr : {12.0, 4.0})
        for (double with : {0.62, 0.81}) {
          auto v = verify_policy(policy, fc, make_sim(nb_prb, nb_sinr, with, 0.80), cfg);
          CHECK((v.decision == VerdictDecision::Approved) == v.all_checks_pass());
        }
  }

  SUBCASE("predictor-baseline divergence flags retraining without gating") {
    auto sim = make_sim(0.95, 12.0, 0.62, 0.80);
    auto v = verify_policy(policy, flat_forecast("cellB", 0.40, 100), sim, cfg);
    CHECK(v.retrain_requested);  // |0.40 - 0.95| >> 2 * 0.01
    CHECK(v.decision == VerdictDecision::Rejected);
  }
}

TEST_CASE("assess_drift policy table") {
  DriftReport severe;
  severe.method = "ks";
  severe.severity = DriftSeverity::Severe;
  DriftReport mild = severe;
  mild.severity = DriftSeverity::Mild;
  DriftReport none = severe;
  none.severity = DriftSeverity::None;

  auto d1 = assess_drift({severe, none});
  CHECK(d1.retrain);
  auto d2 = assess_drift({mild, none});
  CHECK(!d2.retrain);
  CHECK(d2.monitor_only);
  auto d3 = assess_drift({none, none});
  CHECK(!d3.retrain);
  CHECK(!d3.monitor_only);
  CHECK_THROWS_AS(assess_drift({}), std::invalid_argument);
}

TEST_CASE("rollback fires after three consecutive worsening minutes") {
  RollbackMonitor mon;
  mon.snapshot_prb = 0.60;
  mon.worsen_limit = 0.10;
  CHECK(!mon.update(0.72));
  CHECK(!mon.update(0.69));  // streak resets
  CHECK(!mon.update(0.72));
  CHECK(!mon.update(0.73));
  CHECK(mon.update(0.74));  // third consecutive
}
