// Discrete-time (per-minute) two-cell network engine: advances state, applies
// surge / drift / offload, emits telemetry.  A simulation instance is
// single-writer; run independent instances for parallel scenarios.
#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ranassure/kpi.hpp"
#include "ranassure/scenario.hpp"

namespace ranassure {

// Extra users admitted into the surge cell at minute t: zero before t_start,
// linear ramp to peak_extra over [t_start, t_peak), linear relaxation down to
// relax_floor_extra over [t_peak, relax_end), floor afterwards.
inline int surge_extra(const SurgeProfile& p, Minute t) {
  if (t < p.t_start) return 0;
  double extra;
  if (t < p.t_peak) {
    extra = static_cast<double>(p.peak_extra) * (t - p.t_start) / (p.t_peak - p.t_start);
  } else if (t < p.relax_end) {
    extra = p.peak_extra + static_cast<double>(p.relax_floor_extra - p.peak_extra) *
                               (t - p.t_peak) / (p.relax_end - p.t_peak);
  } else {
    extra = p.relax_floor_extra;
  }
  return static_cast<int>(std::lround(extra));
}

// Ambient zero-sum load exchange at minute t (positive = users on the first
// cell of the pair). Phases derive from the scenario seed.
inline int load_jitter_exchange(const LoadJitter& lj, std::uint64_t seed, Minute t) {
  if (!lj.enabled()) return 0;
  double e = 0.0;
  for (std::size_t i = 0; i < lj.amplitudes.size(); ++i) {
    const double phase =
        i < lj.phases.size()
            ? lj.phases[i]
            : 6.283185307179586 * uniform01(hash_combine(hash_combine(seed, 0x1a2b3cull), i));
    e += lj.amplitudes[i] * std::sin(6.283185307179586 * t / lj.periods[i] + phase);
  }
  e += lj.segment_value(t);
  return static_cast<int>(std::lround(e));
}

// Number of users an active directive steers this minute, given the source
// cell's current count and its nominal count. Recomputed every minute against
// current excess; the move applies to this minute's accounting only.
inline int offload_moved(const OffloadDirective& d, Minute t, int source_rrc, int source_nominal) {
  if (!d.active_at(t)) return 0;
  const int excess = std::max(0, source_rrc - source_nominal);
  return static_cast<int>(std::lround(d.fraction * excess));
}

// Applies d to this minute's per-cell counts. Total users are conserved.
inline void apply_offload(std::map<std::string, CellState>& states, const OffloadDirective& d,
                          Minute t, int source_nominal) {
  auto src = states.find(d.source_cell);
  auto dst = states.find(d.target_cell);
  if (src == states.end() || dst == states.end())
    throw std::out_of_range("apply_offload: unknown cell in directive");
  const int moved = offload_moved(d, t, src->second.rrc_users, source_nominal);
  src->second.rrc_users -= moved;
  dst->second.rrc_users += moved;
}

struct TelemetryLog {
  std::vector<KpiSample> samples;  // two per minute, cell order fixed

  std::vector<KpiSample> cell_series(const std::string& cell_id) const {
    std::vector<KpiSample> out;
    for (const auto& s : samples)
      if (s.cell_id == cell_id) out.push_back(s);
    return out;
  }
};

inline constexpr const char* kTelemetryCsvHeader = "t,cell,rrc,thr_mbps,prb,sinr_db";

// Fixed 4-decimal float formatting; this file is the golden-test artifact.
inline std::string telemetry_to_csv(const TelemetryLog& log) {
  std::string out(kTelemetryCsvHeader);
  out.push_back('\n');
  char line[160];
  for (const auto& s : log.samples) {
    std::snprintf(line, sizeof(line), "%d,%s,%d,%.4f,%.4f,%.4f\n", s.t_min, s.cell_id.c_str(),
                  s.rrc_users, s.thr_mbps, s.prb_util, s.sinr_db);
    out += line;
  }
  return out;
}

inline TelemetryLog telemetry_from_csv(std::istream& in) {
  TelemetryLog log;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("telemetry csv: empty input");
  if (line != kTelemetryCsvHeader) throw std::runtime_error("telemetry csv: bad header: " + line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    KpiSample s;
    std::istringstream ls(line);
    std::string field;
    std::getline(ls, field, ',');
    s.t_min = std::stoi(field);
    std::getline(ls, s.cell_id, ',');
    std::getline(ls, field, ',');
    s.rrc_users = std::stoi(field);
    std::getline(ls, field, ',');
    s.thr_mbps = std::stod(field);
    std::getline(ls, field, ',');
    s.prb_util = std::stod(field);
    std::getline(ls, field, ',');
    s.sinr_db = std::stod(field);
    log.samples.push_back(std::move(s));
  }
  return log;
}

inline TelemetryLog load_telemetry_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open telemetry csv: " + path);
  return telemetry_from_csv(in);
}

class Simulation {
 public:
  explicit Simulation(ScenarioConfig config) : cfg_(std::move(config)) {
    cfg_.validate();
    for (const auto& c : cfg_.cells) {
      CellState st;
      st.rrc_users = c.initial_rrc;
      states_[c.cell_id] = st;
    }
  }

  const ScenarioConfig& config() const { return cfg_; }
  Minute now() const { return now_; }
  const TelemetryLog& log() const { return log_; }
  bool directive_active(Minute t) const { return directive_ && directive_->active_at(t); }
  const std::optional<OffloadDirective>& directive() const { return directive_; }

  // Installs d. The engine applies it on every active minute.
  void install_directive(const OffloadDirective& d) {
    d.validate();
    if (directive_ && directive_->policy_id == d.policy_id)
      throw std::logic_error("Simulation: directive " + d.policy_id + " already installed");
    directive_ = d;
  }

  void remove_directive() { directive_.reset(); }

  // Advances one minute: surge, jitter exchange, drift, offload, KPI
  // evaluation. Returns the minute's samples in config cell order.
  std::vector<KpiSample> step_minute(Minute t) {
    if (t != now_) throw std::logic_error("step_minute: expected t == now()");
    if (t >= cfg_.duration_min) throw std::logic_error("step_minute: past scenario duration");

    if (cfg_.drift && !drift_applied_ && t >= cfg_.drift->t_start) {
      auto& st = states_.at(cfg_.drift->cell_id);
      st = apply_drift_event(st, *cfg_.drift, t, drift_applied_);
    }

    const auto& target = cfg_.target_cell();
    const auto& neighbor = cfg_.neighbor_cell();
    const int extra = surge_extra(cfg_.surge, t);
    const int exchange = load_jitter_exchange(cfg_.load_jitter, cfg_.seed, t);

    auto& ts = states_.at(target.cell_id);
    auto& ns = states_.at(neighbor.cell_id);
    ts.rrc_users = target.initial_rrc + extra + exchange;
    ns.rrc_users = neighbor.initial_rrc - exchange;
    if (ts.rrc_users < 0 || ns.rrc_users < 0)
      throw std::runtime_error("step_minute: load jitter drove a cell negative");

    if (directive_ && directive_->active_at(t)) {
      const int nominal = cfg_.cell(directive_->source_cell).params.nominal_rrc;
      apply_offload(states_, *directive_, t, nominal);
    }

    std::vector<KpiSample> out;
    for (const auto& c : cfg_.cells) {
      KpiSample s = evaluate_kpis(c.cell_id, t, states_.at(c.cell_id), c.params, cfg_.seed);
      log_.samples.push_back(s);
      out.push_back(std::move(s));
    }
    ++now_;
    return out;
  }

 private:
  ScenarioConfig cfg_;
  Minute now_ = 0;
  bool drift_applied_ = false;
  std::map<std::string, CellState> states_;
  std::optional<OffloadDirective> directive_;
  TelemetryLog log_;
};

// Per-tick hook; runs after each minute's samples are produced. May install a
// directive on the simulation for subsequent minutes. Returning false or
// throwing aborts the run (partial log preserved).
using TickController = std::function<void(Minute, const std::vector<KpiSample>&, Simulation&)>;

struct RunOutcome {
  TelemetryLog log;
  bool completed = false;
  std::string error;
};

inline RunOutcome run_scenario(const ScenarioConfig& config, const TickController& controller = {}) {
  Simulation sim(config);
  RunOutcome out;
  for (Minute t = 0; t < config.duration_min; ++t) {
    auto samples = sim.step_minute(t);
    if (controller) {
      try {
        controller(t, samples, sim);
      } catch (const std::exception& e) {
        out.log = sim.log();
        out.error = std::string("controller failed at t=") + std::to_string(t) + ": " + e.what();
        return out;
      }
    }
  }
  out.log = sim.log();
  out.completed = true;
  return out;
}

}  // namespace ranassure
