// Scenario configuration: topology, surge profile, drift event, guardrails,
// pipeline knobs and the seed. A scenario file fully determines a run.
#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ranassure/kpi.hpp"

namespace ranassure {

using json = nlohmann::ordered_json;

// User admission surge on the target cell: linear ramp to the peak, then a
// linear relaxation down to a floor of lingering users.
struct SurgeProfile {
  std::string cell_id;
  Minute t_start = 100;
  Minute t_peak = 140;
  int peak_extra = 90;
  Minute relax_end = 170;
  int relax_floor_extra = 20;

  void validate() const {
    if (!(t_start < t_peak && t_peak <= relax_end))
      throw std::invalid_argument("SurgeProfile: need t_start < t_peak <= relax_end");
    if (relax_floor_extra < 0 || relax_floor_extra > peak_extra)
      throw std::invalid_argument("SurgeProfile: need 0 <= relax_floor_extra <= peak_extra");
  }
};

// Zero-sum ambient load exchange between the two cells, rounded to whole
// users, added to the surge cell and subtracted from the other. Keeps total
// user count exact while giving pre-surge telemetry the temporal structure a
// forecaster can actually learn. Two parts:
//   - sinusoids (periods should divide the 30-minute reporting windows so
//     window means stay put); phases may be pinned, else seed-derived;
//   - an optional piecewise-linear schedule of (minute, users) knots, zero
//     outside the knot range: load episodes for the training period.
struct LoadJitter {
  std::vector<double> amplitudes;                  // users
  std::vector<double> periods;                     // minutes
  std::vector<double> phases;                      // radians; empty = seeded
  std::vector<std::pair<double, double>> segments; // (minute, users) knots

  bool enabled() const { return !amplitudes.empty() || !segments.empty(); }

  double segment_value(double t) const {
    if (segments.empty() || t <= segments.front().first || t >= segments.back().first) return 0.0;
    for (std::size_t i = 1; i < segments.size(); ++i) {
      if (t <= segments[i].first) {
        const auto& [t0, v0] = segments[i - 1];
        const auto& [t1, v1] = segments[i];
        return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
      }
    }
    return 0.0;
  }

  void validate() const {
    if (amplitudes.size() != periods.size())
      throw std::invalid_argument("LoadJitter: amplitudes/periods size mismatch");
    if (!phases.empty() && phases.size() != periods.size())
      throw std::invalid_argument("LoadJitter: phases size mismatch");
    for (double p : periods)
      if (!(p > 0.0)) throw std::invalid_argument("LoadJitter: periods must be > 0");
    for (std::size_t i = 1; i < segments.size(); ++i)
      if (!(segments[i].first > segments[i - 1].first))
        throw std::invalid_argument("LoadJitter: segment knots must be strictly increasing");
  }
};

// Steers a fraction of the source cell's excess users (above its nominal
// count) to the target cell for every active minute.
struct OffloadDirective {
  std::string policy_id;
  std::string source_cell;
  std::string target_cell;
  double fraction = 0.0;  // in [0, 0.5]
  Minute active_from = 0;
  Minute ttl_min = 30;

  bool active_at(Minute t) const { return t >= active_from && t < active_from + ttl_min; }

  void validate() const {
    if (fraction < 0.0 || fraction > 0.5)
      throw std::invalid_argument("OffloadDirective: fraction must be in [0, 0.5]");
    if (ttl_min <= 0) throw std::invalid_argument("OffloadDirective: ttl_min must be > 0");
  }
};

struct GuardrailConfig {
  double prb_trigger = 0.80;         // predicted PRB above this fires the policy trigger
  int rrc_trigger_delta = 40;        // predicted RRC above nominal+delta also fires
  double fraction_max = 0.5;
  double fraction_gain = 2.5;        // offload fraction per unit of PRB overshoot
  double neighbor_prb_max = 0.85;    // simulated neighbor PRB must stay strictly below
  double neighbor_sinr_min_db = 5.0; // simulated neighbor SINR must stay at or above
  double rollback_prb_worsen = 0.10; // sustained target PRB worsening that triggers rollback

  void validate() const {
    if (!(prb_trigger > 0.0 && prb_trigger < neighbor_prb_max && neighbor_prb_max <= 1.0))
      throw std::invalid_argument("GuardrailConfig: need 0 < prb_trigger < neighbor_prb_max <= 1");
    if (!(fraction_max > 0.0 && fraction_max <= 0.5))
      throw std::invalid_argument("GuardrailConfig: need 0 < fraction_max <= 0.5");
  }
};

// Knobs for the agent pipeline itself (training schedule, detector constants).
struct PipelineConfig {
  Minute train_end_min = 99;    // train on telemetry up to and including this minute
  int min_train_windows = 50;
  int tuner_epochs = 300;
  int train_epochs = 3000;
  int batch_size = 16;
  int checkpoint_every = 200;
  double baseline_ratio = 1.0;  // val RMSE must be <= ratio * persistence RMSE
  Minute offload_ttl_min = 30;
  double cusum_k = 0.5;
  double cusum_h = 5.0;
  double ks_alpha = 0.05;
  bool joint_inputs = false;    // reserved: feed both cells' KPIs to one model
  bool retrain_on_request = false;  // reference runs only log retrain requests
};

struct CellConfig {
  std::string cell_id;
  int initial_rrc = 0;
  CellParams params;
};

struct ScenarioConfig {
  std::string name;
  Minute duration_min = 240;
  std::uint64_t seed = 1;
  Minute eval_start = 140;
  Minute eval_end = 169;  // inclusive
  std::vector<CellConfig> cells;
  SurgeProfile surge;
  std::optional<DriftEvent> drift;
  LoadJitter load_jitter;
  GuardrailConfig guardrails;
  PipelineConfig pipeline;

  const CellConfig& cell(const std::string& id) const {
    for (const auto& c : cells)
      if (c.cell_id == id) return c;
    throw std::out_of_range("ScenarioConfig: unknown cell " + id);
  }

  // Surge target is "the" congested cell; the other one is its neighbor.
  const CellConfig& target_cell() const { return cell(surge.cell_id); }
  const CellConfig& neighbor_cell() const {
    for (const auto& c : cells)
      if (c.cell_id != surge.cell_id) return c;
    throw std::logic_error("ScenarioConfig: no neighbor cell");
  }

  void validate() const {
    if (cells.size() != 2) throw std::invalid_argument("ScenarioConfig: exactly two cells required");
    if (duration_min <= 0) throw std::invalid_argument("ScenarioConfig: duration must be > 0");
    if (!(eval_start <= eval_end && eval_end < duration_min))
      throw std::invalid_argument("ScenarioConfig: eval window out of range");
    for (const auto& c : cells) {
      c.params.validate();
      if (c.initial_rrc < 0) throw std::invalid_argument("ScenarioConfig: initial_rrc must be >= 0");
    }
    surge.validate();
    (void)target_cell();
    load_jitter.validate();
    guardrails.validate();
    if (drift) (void)cell(drift->cell_id);
  }
};

// ---------------------------------------------------------------------------
// JSON (de)serialization.  Field names are the file format contract.
// ---------------------------------------------------------------------------

inline json to_json(const NoiseSd& n) {
  return json{{"rrc", n.rrc}, {"thr_mbps", n.thr_mbps}, {"prb", n.prb}, {"sinr_db", n.sinr_db}};
}

inline NoiseSd noise_from_json(const json& j) {
  NoiseSd n;
  n.rrc = j.value("rrc", 0.0);
  n.thr_mbps = j.value("thr_mbps", 0.0);
  n.prb = j.value("prb", 0.0);
  n.sinr_db = j.value("sinr_db", 0.0);
  return n;
}

inline json to_json(const CellParams& p) {
  return json{{"capacity_mbps", p.capacity_mbps}, {"nominal_rrc", p.nominal_rrc},
              {"prb_per_ue", p.prb_per_ue},       {"prb_idle", p.prb_idle},
              {"sinr_ref_db", p.sinr_ref_db},     {"sinr_slope_db", p.sinr_slope_db},
              {"efficiency", p.efficiency},       {"noise_sd", to_json(p.noise_sd)}};
}

inline CellParams cell_params_from_json(const json& j) {
  CellParams p;
  p.capacity_mbps = j.at("capacity_mbps").get<double>();
  p.nominal_rrc = j.at("nominal_rrc").get<int>();
  p.prb_per_ue = j.at("prb_per_ue").get<double>();
  p.prb_idle = j.value("prb_idle", 0.0);
  p.sinr_ref_db = j.at("sinr_ref_db").get<double>();
  p.sinr_slope_db = j.at("sinr_slope_db").get<double>();
  p.efficiency = j.at("efficiency").get<double>();
  if (j.contains("noise_sd")) p.noise_sd = noise_from_json(j.at("noise_sd"));
  return p;
}

inline json to_json(const ScenarioConfig& s) {
  json cells = json::array();
  for (const auto& c : s.cells) {
    cells.push_back(json{{"cell_id", c.cell_id},
                         {"initial_rrc", c.initial_rrc},
                         {"params", to_json(c.params)}});
  }
  json j{{"name", s.name},
         {"duration_min", s.duration_min},
         {"seed", s.seed},
         {"eval_window", json{{"start", s.eval_start}, {"end", s.eval_end}}},
         {"cells", cells},
         {"surge",
          json{{"cell_id", s.surge.cell_id},
               {"t_start", s.surge.t_start},
               {"t_peak", s.surge.t_peak},
               {"peak_extra", s.surge.peak_extra},
               {"relax_end", s.surge.relax_end},
               {"relax_floor_extra", s.surge.relax_floor_extra}}}};
  if (s.drift) {
    j["drift"] = json{{"t_start", s.drift->t_start},
                      {"cell_id", s.drift->cell_id},
                      {"prb_base_delta", s.drift->prb_base_delta},
                      {"cap_factor", s.drift->cap_factor},
                      {"sinr_delta_db", s.drift->sinr_delta_db}};
  }
  if (s.load_jitter.enabled()) {
    j["load_jitter"] = json{{"amplitudes", s.load_jitter.amplitudes},
                            {"periods", s.load_jitter.periods}};
    if (!s.load_jitter.phases.empty()) j["load_jitter"]["phases"] = s.load_jitter.phases;
    if (!s.load_jitter.segments.empty()) {
      json segs = json::array();
      for (const auto& [t, v] : s.load_jitter.segments) segs.push_back(json::array({t, v}));
      j["load_jitter"]["segments"] = segs;
    }
  }
  j["guardrails"] = json{{"prb_trigger", s.guardrails.prb_trigger},
                         {"rrc_trigger_delta", s.guardrails.rrc_trigger_delta},
                         {"fraction_max", s.guardrails.fraction_max},
                         {"fraction_gain", s.guardrails.fraction_gain},
                         {"neighbor_prb_max", s.guardrails.neighbor_prb_max},
                         {"neighbor_sinr_min_db", s.guardrails.neighbor_sinr_min_db},
                         {"rollback_prb_worsen", s.guardrails.rollback_prb_worsen}};
  j["pipeline"] = json{{"train_end_min", s.pipeline.train_end_min},
                       {"min_train_windows", s.pipeline.min_train_windows},
                       {"tuner_epochs", s.pipeline.tuner_epochs},
                       {"train_epochs", s.pipeline.train_epochs},
                       {"batch_size", s.pipeline.batch_size},
                       {"checkpoint_every", s.pipeline.checkpoint_every},
                       {"baseline_ratio", s.pipeline.baseline_ratio},
                       {"offload_ttl_min", s.pipeline.offload_ttl_min},
                       {"cusum_k", s.pipeline.cusum_k},
                       {"cusum_h", s.pipeline.cusum_h},
                       {"ks_alpha", s.pipeline.ks_alpha},
                       {"joint_inputs", s.pipeline.joint_inputs},
                       {"retrain_on_request", s.pipeline.retrain_on_request}};
  return j;
}

inline ScenarioConfig scenario_from_json(const json& j) {
  ScenarioConfig s;
  s.name = j.value("name", "scenario");
  s.duration_min = j.at("duration_min").get<Minute>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.eval_start = j.at("eval_window").at("start").get<Minute>();
  s.eval_end = j.at("eval_window").at("end").get<Minute>();
  for (const auto& cj : j.at("cells")) {
    CellConfig c;
    c.cell_id = cj.at("cell_id").get<std::string>();
    c.initial_rrc = cj.at("initial_rrc").get<int>();
    c.params = cell_params_from_json(cj.at("params"));
    s.cells.push_back(std::move(c));
  }
  const auto& sj = j.at("surge");
  s.surge.cell_id = sj.at("cell_id").get<std::string>();
  s.surge.t_start = sj.at("t_start").get<Minute>();
  s.surge.t_peak = sj.at("t_peak").get<Minute>();
  s.surge.peak_extra = sj.at("peak_extra").get<int>();
  s.surge.relax_end = sj.at("relax_end").get<Minute>();
  s.surge.relax_floor_extra = sj.at("relax_floor_extra").get<int>();
  if (j.contains("drift") && !j.at("drift").is_null()) {
    const auto& dj = j.at("drift");
    DriftEvent d;
    d.t_start = dj.at("t_start").get<Minute>();
    d.cell_id = dj.at("cell_id").get<std::string>();
    d.prb_base_delta = dj.at("prb_base_delta").get<double>();
    d.cap_factor = dj.at("cap_factor").get<double>();
    d.sinr_delta_db = dj.at("sinr_delta_db").get<double>();
    s.drift = d;
  }
  if (j.contains("load_jitter")) {
    s.load_jitter.amplitudes = j.at("load_jitter").at("amplitudes").get<std::vector<double>>();
    s.load_jitter.periods = j.at("load_jitter").at("periods").get<std::vector<double>>();
    if (j.at("load_jitter").contains("phases"))
      s.load_jitter.phases = j.at("load_jitter").at("phases").get<std::vector<double>>();
    if (j.at("load_jitter").contains("segments")) {
      for (const auto& sj : j.at("load_jitter").at("segments"))
        s.load_jitter.segments.emplace_back(sj.at(0).get<double>(), sj.at(1).get<double>());
    }
  }
  if (j.contains("guardrails")) {
    const auto& gj = j.at("guardrails");
    s.guardrails.prb_trigger = gj.value("prb_trigger", 0.80);
    s.guardrails.rrc_trigger_delta = gj.value("rrc_trigger_delta", 40);
    s.guardrails.fraction_max = gj.value("fraction_max", 0.5);
    s.guardrails.fraction_gain = gj.value("fraction_gain", 2.5);
    s.guardrails.neighbor_prb_max = gj.value("neighbor_prb_max", 0.85);
    s.guardrails.neighbor_sinr_min_db = gj.value("neighbor_sinr_min_db", 5.0);
    s.guardrails.rollback_prb_worsen = gj.value("rollback_prb_worsen", 0.10);
  }
  if (j.contains("pipeline")) {
    const auto& pj = j.at("pipeline");
    s.pipeline.train_end_min = pj.value("train_end_min", 99);
    s.pipeline.min_train_windows = pj.value("min_train_windows", 50);
    s.pipeline.tuner_epochs = pj.value("tuner_epochs", 300);
    s.pipeline.train_epochs = pj.value("train_epochs", 3000);
    s.pipeline.batch_size = pj.value("batch_size", 16);
    s.pipeline.checkpoint_every = pj.value("checkpoint_every", 200);
    s.pipeline.baseline_ratio = pj.value("baseline_ratio", 1.0);
    s.pipeline.offload_ttl_min = pj.value("offload_ttl_min", 30);
    s.pipeline.cusum_k = pj.value("cusum_k", 0.5);
    s.pipeline.cusum_h = pj.value("cusum_h", 5.0);
    s.pipeline.ks_alpha = pj.value("ks_alpha", 0.05);
    s.pipeline.joint_inputs = pj.value("joint_inputs", false);
    s.pipeline.retrain_on_request = pj.value("retrain_on_request", false);
  }
  s.validate();
  return s;
}

inline ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path);
  json j = json::parse(in);
  return scenario_from_json(j);
}

inline void save_scenario(const ScenarioConfig& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scenario file: " + path);
  out << to_json(s).dump(2) << '\n';
}

inline std::string scenario_digest_input(const ScenarioConfig& s) { return to_json(s).dump(); }

// The two-cell surge-and-drift reference scenario. `scenarios/surge_drift.json`
// in the repository is this config serialized; a unit test keeps them in sync.
inline ScenarioConfig make_reference_scenario(bool with_drift = true) {
  ScenarioConfig s;
  s.name = with_drift ? "surge_drift" : "surge_nodrift";
  s.duration_min = 240;
  s.seed = 11;
  s.eval_start = 140;
  s.eval_end = 169;

  CellConfig a;
  a.cell_id = "cellA";
  a.initial_rrc = 120;
  a.params.capacity_mbps = 200.0;
  a.params.nominal_rrc = 120;
  a.params.prb_per_ue = 0.00383;
  a.params.prb_idle = 0.0;
  a.params.sinr_ref_db = 25.0;
  a.params.sinr_slope_db = 15.0;
  a.params.efficiency = 0.9;
  a.params.noise_sd = NoiseSd{0.0, 0.5, 0.0025, 0.15};

  CellConfig b = a;
  b.cell_id = "cellB";
  b.initial_rrc = 80;
  b.params.capacity_mbps = 150.0;
  b.params.nominal_rrc = 80;
  b.params.prb_per_ue = 0.00483;

  s.cells = {a, b};
  s.surge.cell_id = "cellA";
  s.surge.t_start = 100;
  s.surge.t_peak = 140;
  s.surge.peak_extra = 90;
  s.surge.relax_end = 170;
  s.surge.relax_floor_extra = 20;
  if (with_drift) {
    DriftEvent d;
    d.t_start = 138;
    d.cell_id = "cellB";
    d.prb_base_delta = 0.15;
    d.cap_factor = 0.6;
    d.sinr_delta_db = -2.0;
    s.drift = d;
  }
  // One slow wave shapes the policy-trigger crossing (its period divides the
  // 30-minute reporting windows, so window means are unaffected); the segment
  // schedule gives the training period surge-shaped load episodes in both
  // directions, ending with a build-up the training cutoff leaves unfinished.
  s.load_jitter.amplitudes = {6.0};
  s.load_jitter.periods = {30.0};
  s.load_jitter.phases = {2.5133};
  s.load_jitter.segments = {{12.0, 0.0},   {26.0, 38.0},  {34.0, 52.0},  {44.0, 56.0},
                            {52.0, 42.0},  {68.0, -18.0}, {78.0, -58.0}, {82.0, -62.0},
                            {99.0, 40.0},  {102.0, 52.0}, {108.0, 0.0}};
  return s;
}

}  // namespace ranassure
