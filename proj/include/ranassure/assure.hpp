// Assurance layer: Policy Generator, Simulator/Baseline, Verifier, Drift
// Detector decision logic and the Deployment agent's rollback monitor.
// The verifier judges on the baseline agent's independently simulated
// trajectories; the predictor-vs-simulation gap only flags retraining.
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ranassure/kpi.hpp"
#include "ranassure/learn.hpp"
#include "ranassure/scenario.hpp"
#include "ranassure/stats.hpp"

namespace ranassure {

// ---------------------------------------------------------------------------
// Policy generation (PGA)
// ---------------------------------------------------------------------------

struct Policy {
  std::string policy_id;
  OffloadDirective directive;
  // expected KPI deltas per cell, annotated from the triggering forecast
  nlohmann::json predicted_impact;
  std::string origin_forecast;  // model id of the forecast that triggered

  nlohmann::ordered_json to_json() const {
    return nlohmann::ordered_json{{"policy_id", policy_id},
                                  {"source_cell", directive.source_cell},
                                  {"target_cell", directive.target_cell},
                                  {"fraction", directive.fraction},
                                  {"active_from", directive.active_from},
                                  {"ttl_min", directive.ttl_min},
                                  {"predicted_impact", predicted_impact},
                                  {"origin_forecast", origin_forecast}};
  }
};

// Turns a congestion forecast into a candidate offload. The trigger fires on
// predicted PRB above prb_trigger or predicted RRC above nominal plus the
// configured delta; the fraction scales with the PRB overshoot. No trigger or
// a zero fraction yields no policy.
inline std::optional<Policy> generate_policy(const ForecastSet& forecast,
                                             const GuardrailConfig& cfg, int nominal_rrc,
                                             const std::string& neighbor_cell, Minute active_from,
                                             Minute ttl_min) {
  const double max_prb = forecast.max_kpi(Kpi::Prb);
  const double max_rrc = forecast.max_kpi(Kpi::Rrc);
  const bool triggered =
      max_prb > cfg.prb_trigger || max_rrc > static_cast<double>(nominal_rrc + cfg.rrc_trigger_delta);
  if (!triggered) return std::nullopt;
  const double fraction =
      std::clamp(cfg.fraction_gain * (max_prb - cfg.prb_trigger), 0.0, cfg.fraction_max);
  if (fraction <= 0.0) return std::nullopt;

  Policy p;
  p.policy_id = "policy-" + forecast.cell_id + "-t" + std::to_string(forecast.t_origin);
  p.directive.policy_id = p.policy_id;
  p.directive.source_cell = forecast.cell_id;
  p.directive.target_cell = neighbor_cell;
  p.directive.fraction = fraction;
  p.directive.active_from = active_from;
  p.directive.ttl_min = ttl_min;
  p.origin_forecast = forecast.model_id;

  // Impact annotation from the forecast's own implied load/KPI proportions.
  const double excess = std::max(0.0, max_rrc - nominal_rrc);
  const double moved = fraction * excess;
  const double prb_per_ue_implied = max_rrc > 0 ? max_prb / max_rrc : 0.0;
  const double prb_delta = moved * prb_per_ue_implied;
  p.predicted_impact = nlohmann::json{
      {forecast.cell_id, {{"rrc", -moved}, {"prb", -prb_delta}}},
      {neighbor_cell, {{"rrc", moved}, {"prb", prb_delta}}},
  };
  return p;
}

// ---------------------------------------------------------------------------
// Local baseline model (SBA)
// ---------------------------------------------------------------------------

// Per-cell linear reconstruction of the KPI relationships from recent
// telemetry, anchored at the current observation so drifted states carry
// straight into projections.
struct LocalBaselineModel {
  std::string cell_id;
  double prb_per_ue_eff = 0.0;  // d prb / d rrc
  double prb_floor = 0.0;       // fitted intercept
  double sinr_slope = 0.0;      // d sinr / d prb (negative in practice)
  double thr_slope = 0.0;       // d thr / d prb (negative in practice)
  double resid_sd = 0.0;        // prb-vs-rrc residual sd
  int fit_window = 0;
  bool degenerate = false;      // intercept-only fallback engaged
  // anchors: last observed sample
  int last_rrc = 0;
  double last_prb = 0.0;
  double last_sinr = 0.0;
  double last_thr = 0.0;

  double project_prb(int rrc) const {
    return clamp01(last_prb + prb_per_ue_eff * (rrc - last_rrc));
  }
  double project_sinr(double prb) const { return last_sinr + sinr_slope * (prb - last_prb); }
  double project_thr(double prb) const {
    return std::max(0.0, last_thr + thr_slope * (prb - last_prb));
  }
};

namespace detail {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double resid_sd = 0.0;
  bool degenerate = false;
};

inline LineFit ols(const std::vector<double>& x, const std::vector<double>& y,
                   double fallback_slope) {
  LineFit fit;
  const std::size_t n = x.size();
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  long double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx < 1e-9) {
    fit.degenerate = true;
    fit.slope = fallback_slope;
  } else {
    fit.slope = static_cast<double>(sxy / sxx);
  }
  fit.intercept = static_cast<double>(my - fit.slope * mx);
  long double ssr = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const long double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ssr += r * r;
  }
  fit.resid_sd = n > 2 ? std::sqrt(static_cast<double>(ssr / (n - 2))) : 0.0;
  return fit;
}

}  // namespace detail

// Ordinary least squares of prb on rrc over the most recent window (plus
// analogous sinr and thr lines against prb). A zero-variance rrc window
// falls back to an intercept-only fit with the slope taken from the prior.
inline LocalBaselineModel fit_local_model(const std::vector<KpiSample>& recent,
                                          const std::string& cell_id, double prior_prb_per_ue,
                                          int fit_window = 30) {
  std::vector<const KpiSample*> rows;
  for (const auto& s : recent)
    if (s.cell_id == cell_id) rows.push_back(&s);
  if (rows.size() > static_cast<std::size_t>(fit_window))
    rows.erase(rows.begin(), rows.end() - fit_window);
  if (rows.size() < 10)
    throw std::invalid_argument("fit_local_model: need at least 10 recent samples");

  std::vector<double> rrc, prb, sinr, thr;
  for (const auto* s : rows) {
    rrc.push_back(s->rrc_users);
    prb.push_back(s->prb_util);
    sinr.push_back(s->sinr_db);
    thr.push_back(s->thr_mbps);
  }
  LocalBaselineModel m;
  m.cell_id = cell_id;
  m.fit_window = static_cast<int>(rows.size());
  auto prb_fit = detail::ols(rrc, prb, prior_prb_per_ue);
  m.prb_per_ue_eff = prb_fit.slope;
  m.prb_floor = prb_fit.intercept;
  m.resid_sd = prb_fit.resid_sd;
  m.degenerate = prb_fit.degenerate;
  m.sinr_slope = detail::ols(prb, sinr, 0.0).slope;
  m.thr_slope = detail::ols(prb, thr, 0.0).slope;
  const auto* last = rows.back();
  m.last_rrc = last->rrc_users;
  m.last_prb = last->prb_util;
  m.last_sinr = last->sinr_db;
  m.last_thr = last->thr_mbps;
  return m;
}

// One simulated minute of one cell.
struct SimPoint {
  int rrc = 0;
  double prb = 0.0;
  double sinr = 0.0;
  double thr = 0.0;
};

struct SimulatedTrajectories {
  std::string source_cell, target_cell;
  std::vector<SimPoint> source;         // with the policy applied
  std::vector<SimPoint> target;         // with the policy applied
  std::vector<SimPoint> source_no_action;  // persistence projection, no policy
  double target_resid_sd = 0.0;         // neighbor model residual sd
};

// Independent reference: applies the offload arithmetic to a persistence
// projection of current RRC and evaluates the fitted, current-state-anchored
// lines per minute over the policy's ttl. No simulator state is touched.
inline SimulatedTrajectories simulate_policy(const Policy& policy,
                                             const LocalBaselineModel& source_model,
                                             const LocalBaselineModel& target_model,
                                             int source_nominal_rrc) {
  if (source_model.cell_id != policy.directive.source_cell ||
      target_model.cell_id != policy.directive.target_cell)
    throw std::invalid_argument("simulate_policy: models do not match the directive cells");

  SimulatedTrajectories out;
  out.source_cell = source_model.cell_id;
  out.target_cell = target_model.cell_id;
  out.target_resid_sd = target_model.resid_sd;
  for (Minute step = 0; step < policy.directive.ttl_min; ++step) {
    const int src_rrc = source_model.last_rrc;  // persistence projection
    const int moved = static_cast<int>(std::lround(
        policy.directive.fraction * std::max(0, src_rrc - source_nominal_rrc)));
    auto eval = [](const LocalBaselineModel& m, int rrc) {
      SimPoint p;
      p.rrc = rrc;
      p.prb = m.project_prb(rrc);
      p.sinr = m.project_sinr(p.prb);
      p.thr = m.project_thr(p.prb);
      return p;
    };
    out.source.push_back(eval(source_model, src_rrc - moved));
    out.target.push_back(eval(target_model, target_model.last_rrc + moved));
    out.source_no_action.push_back(eval(source_model, src_rrc));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Verification (VA)
// ---------------------------------------------------------------------------

enum class VerdictDecision { Approved, Rejected, RetrainRequested };

inline const char* verdict_decision_name(VerdictDecision d) {
  switch (d) {
    case VerdictDecision::Approved: return "approved";
    case VerdictDecision::Rejected: return "rejected";
    case VerdictDecision::RetrainRequested: return "retrain_requested";
  }
  return "?";
}

struct VerdictCheck {
  std::string name;
  double limit = 0.0;
  double value = 0.0;
  bool pass = false;
};

struct Verdict {
  std::string policy_id;
  VerdictDecision decision = VerdictDecision::Rejected;
  std::vector<VerdictCheck> checks;
  bool retrain_requested = false;  // predictor-vs-baseline divergence flag
  std::string rationale;

  bool all_checks_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json checks_json = nlohmann::ordered_json::array();
    for (const auto& c : checks)
      checks_json.push_back(nlohmann::ordered_json{
          {"name", c.name}, {"limit", c.limit}, {"value", c.value}, {"pass", c.pass}});
    return nlohmann::ordered_json{{"policy_id", policy_id},
                                  {"decision", verdict_decision_name(decision)},
                                  {"checks", checks_json},
                                  {"retrain_requested", retrain_requested},
                                  {"rationale", rationale}};
  }
};

// Safety checks run on the independently simulated trajectories:
//   1. neighbor PRB stays strictly below neighbor_prb_max at every minute;
//   2. neighbor SINR stays at or above neighbor_sinr_min_db;
//   3. target-cell PRB improves against the no-action projection.
// Additionally, when the predictor's neighbor trajectory disagrees with the
// simulation by more than 2x the simulation residual sd on average, the
// verdict carries a retraining request for the drift detector.
inline Verdict verify_policy(const Policy& policy, const ForecastSet& predictor_neighbor,
                             const SimulatedTrajectories& sim, const GuardrailConfig& cfg) {
  Verdict v;
  v.policy_id = policy.policy_id;

  double max_nb_prb = -1e300, min_nb_sinr = 1e300;
  for (const auto& p : sim.target) {
    max_nb_prb = std::max(max_nb_prb, p.prb);
    min_nb_sinr = std::min(min_nb_sinr, p.sinr);
  }
  double with_policy = 0, without_policy = 0;
  for (const auto& p : sim.source) with_policy += p.prb;
  for (const auto& p : sim.source_no_action) without_policy += p.prb;
  with_policy /= sim.source.size();
  without_policy /= sim.source_no_action.size();

  v.checks.push_back({"neighbor_prb_max", cfg.neighbor_prb_max, max_nb_prb,
                      max_nb_prb < cfg.neighbor_prb_max});
  v.checks.push_back({"neighbor_sinr_min", cfg.neighbor_sinr_min_db, min_nb_sinr,
                      min_nb_sinr >= cfg.neighbor_sinr_min_db});
  v.checks.push_back({"target_prb_improves", without_policy, with_policy,
                      with_policy < without_policy});

  // Divergence between the predictor's view of the neighbor and the
  // baseline simulation; a drift symptom, not a safety gate.
  if (!predictor_neighbor.point.empty() && !sim.target.empty()) {
    double gap = 0;
    const std::size_t n = std::min<std::size_t>(predictor_neighbor.point.size(), sim.target.size());
    for (std::size_t i = 0; i < n; ++i)
      gap += std::abs(predictor_neighbor.point[i][static_cast<int>(Kpi::Prb)] - sim.target[i].prb);
    gap /= static_cast<double>(n);
    v.retrain_requested = gap > 2.0 * std::max(1e-6, sim.target_resid_sd);
  }

  v.decision = v.all_checks_pass() ? VerdictDecision::Approved : VerdictDecision::Rejected;
  std::ostringstream os;
  if (v.decision == VerdictDecision::Approved) {
    os << "approved " << policy.policy_id << ": simulated neighbor PRB peak " << max_nb_prb
       << " stays below " << cfg.neighbor_prb_max << " and target load improves";
  } else {
    os << "rejected " << policy.policy_id << ":";
    for (const auto& c : v.checks)
      if (!c.pass) os << " " << c.name << " failed (" << c.value << " vs " << c.limit << ")";
  }
  if (v.retrain_requested) os << "; predictor diverges from baseline simulation, retraining requested";
  v.rationale = os.str();
  return v;
}

// ---------------------------------------------------------------------------
// Drift assessment (DDA)
// ---------------------------------------------------------------------------

struct DriftDecision {
  bool retrain = false;
  bool monitor_only = false;
  std::vector<DriftReport> offending;
};

// Severe KS on any KPI or a CUSUM alarm requests retraining; mild findings
// are monitor-only audit material.
inline DriftDecision assess_drift(const std::vector<DriftReport>& reports) {
  if (reports.empty()) throw std::invalid_argument("assess_drift: no reports");
  DriftDecision d;
  for (const auto& r : reports) {
    if (r.severity == DriftSeverity::Severe) {
      d.retrain = true;
      d.offending.push_back(r);
    } else if (r.severity == DriftSeverity::Mild) {
      d.monitor_only = true;
      d.offending.push_back(r);
    }
  }
  if (d.retrain) d.monitor_only = false;
  return d;
}

// ---------------------------------------------------------------------------
// Deployment records and rollback (DA)
// ---------------------------------------------------------------------------

struct DeploymentRecord {
  std::string policy_id;
  std::string action;  // "deployed" | "refused" | "rolled_back"
  Minute t_min = 0;
  double snapshot_prb = 0.0;  // source-cell PRB at deployment
  std::string note;

  nlohmann::ordered_json to_json() const {
    return nlohmann::ordered_json{{"policy_id", policy_id},
                                  {"action", action},
                                  {"t_min", t_min},
                                  {"snapshot_prb", snapshot_prb},
                                  {"note", note}};
  }
};

// Watches the source cell after deployment; sustained worsening of PRB
// against the pre-deployment snapshot (3 consecutive minutes) trips rollback.
struct RollbackMonitor {
  double snapshot_prb = 0.0;
  double worsen_limit = 0.10;
  int streak = 0;

  bool update(double observed_prb) {
    if (observed_prb > snapshot_prb + worsen_limit)
      ++streak;
    else
      streak = 0;
    return streak >= 3;
  }
};

}  // namespace ranassure
