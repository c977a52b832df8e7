// Closed-form cell load -> KPI mappings shared by the simulator and, in
// fitted form, by the baseline agent.  Pure functions, safe to call from any
// thread.
//
// Model:
//   prb  = clamp(prb_idle + prb_base_offset + rrc * prb_per_ue / cap_factor, 0, 1)
//   sinr = sinr_ref_db - sinr_slope_db * prb + sinr_offset_db
//   thr  = capacity_mbps * cap_factor * (1 - prb) * efficiency
//
// cap_factor both divides the per-UE PRB cost and multiplies capacity, so a
// single parameter expresses "capacity reduced to X% of original" in both the
// resource and the rate dimension.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "ranassure/rng.hpp"

namespace ranassure {

using Minute = int;

enum class Kpi : int { Rrc = 0, Thr = 1, Prb = 2, Sinr = 3 };
inline constexpr int kKpiCount = 4;

inline const char* kpi_name(Kpi k) {
  switch (k) {
    case Kpi::Rrc: return "rrc";
    case Kpi::Thr: return "thr_mbps";
    case Kpi::Prb: return "prb";
    case Kpi::Sinr: return "sinr_db";
  }
  return "?";
}

// One cell's four KPIs at one simulated minute; the unit of all telemetry.
struct KpiSample {
  Minute t_min = 0;
  std::string cell_id;
  int rrc_users = 0;       // >= 0
  double thr_mbps = 0.0;   // >= 0
  double prb_util = 0.0;   // in [0, 1]
  double sinr_db = 0.0;

  double kpi(Kpi k) const {
    switch (k) {
      case Kpi::Rrc: return static_cast<double>(rrc_users);
      case Kpi::Thr: return thr_mbps;
      case Kpi::Prb: return prb_util;
      case Kpi::Sinr: return sinr_db;
    }
    return 0.0;
  }

  bool valid() const {
    return t_min >= 0 && rrc_users >= 0 && thr_mbps >= 0.0 && prb_util >= 0.0 &&
           prb_util <= 1.0 && std::isfinite(thr_mbps) && std::isfinite(prb_util) &&
           std::isfinite(sinr_db);
  }
};

// Additive per-KPI noise standard deviations. rrc must stay 0: user counts are
// governed by conservation, load jitter is modelled as an inter-cell exchange
// at scenario level instead.
struct NoiseSd {
  double rrc = 0.0;
  double thr_mbps = 0.0;
  double prb = 0.0;
  double sinr_db = 0.0;

  bool all_zero() const { return rrc == 0.0 && thr_mbps == 0.0 && prb == 0.0 && sinr_db == 0.0; }
};

struct CellParams {
  double capacity_mbps = 200.0;
  int nominal_rrc = 120;       // pre-surge attached users
  double prb_per_ue = 0.00383; // PRB fraction consumed per connected user
  double prb_idle = 0.0;       // idle PRB floor
  double sinr_ref_db = 25.0;   // SINR at zero PRB load
  double sinr_slope_db = 15.0; // SINR loss per unit PRB
  double efficiency = 0.9;     // throughput efficiency factor
  NoiseSd noise_sd;

  void validate() const {
    if (!(prb_per_ue > 0.0)) throw std::invalid_argument("CellParams: prb_per_ue must be > 0");
    if (efficiency < 0.0 || efficiency > 1.0)
      throw std::invalid_argument("CellParams: efficiency must be in [0, 1]");
    if (sinr_slope_db < 0.0) throw std::invalid_argument("CellParams: sinr_slope_db must be >= 0");
    if (prb_idle < 0.0 || prb_idle > 1.0)
      throw std::invalid_argument("CellParams: prb_idle must be in [0, 1]");
    if (capacity_mbps <= 0.0) throw std::invalid_argument("CellParams: capacity_mbps must be > 0");
    if (noise_sd.rrc != 0.0)
      throw std::invalid_argument("CellParams: additive rrc noise would break user conservation");
  }
};

// Mutable per-cell load state, including the three drift dimensions.
struct CellState {
  int rrc_users = 0;
  double prb_base_offset = 0.0;  // additive PRB baseline shift
  double cap_factor = 1.0;       // multiplicative capacity factor, (0, 1]
  double sinr_offset_db = 0.0;   // additive SINR shift

  void validate() const {
    if (!(cap_factor > 0.0 && cap_factor <= 1.0))
      throw std::invalid_argument("CellState: cap_factor must be in (0, 1]");
    if (prb_base_offset < 0.0)
      throw std::invalid_argument("CellState: prb_base_offset must be >= 0");
    if (rrc_users < 0) throw std::invalid_argument("CellState: rrc_users must be >= 0");
  }
};

// A one-shot environment degradation. Once applied at t >= t_start it remains
// applied for the rest of the run.
struct DriftEvent {
  Minute t_start = 0;
  std::string cell_id;
  double prb_base_delta = 0.0;
  double cap_factor = 1.0;
  double sinr_delta_db = 0.0;
};

inline double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

inline double compute_prb(const CellState& state, const CellParams& params) {
  const double load = static_cast<double>(state.rrc_users) * params.prb_per_ue / state.cap_factor;
  return clamp01(params.prb_idle + state.prb_base_offset + load);
}

inline double compute_sinr(double prb, const CellState& state, const CellParams& params) {
  return params.sinr_ref_db - params.sinr_slope_db * prb + state.sinr_offset_db;
}

inline double compute_throughput(double prb, const CellState& state, const CellParams& params) {
  return params.capacity_mbps * state.cap_factor * (1.0 - prb) * params.efficiency;
}

// Applies ev to state at minute t. No-op before ev.t_start. `applied` guards
// against double application of the same event.
inline CellState apply_drift_event(const CellState& state, const DriftEvent& ev, Minute t,
                                   bool& applied) {
  if (applied) throw std::logic_error("apply_drift_event: event already applied");
  if (t < ev.t_start) return state;
  CellState next = state;
  next.prb_base_offset += ev.prb_base_delta;
  next.cap_factor *= ev.cap_factor;
  next.sinr_offset_db += ev.sinr_delta_db;
  next.validate();
  applied = true;
  return next;
}

// Reproducible per-(cell, KPI, minute) Gaussian noise: stateless, so replaying
// any minute of any run regenerates the same value.
inline double kpi_noise(std::uint64_t scenario_seed, const std::string& cell_id, Kpi kpi,
                        Minute t, double sd) {
  if (sd == 0.0) return 0.0;
  std::uint64_t key = hash_combine(scenario_seed, hash_str(cell_id));
  key = hash_combine(key, static_cast<std::uint64_t>(static_cast<int>(kpi)) + 17u);
  key = hash_combine(key, static_cast<std::uint64_t>(t) + 1013u);
  return sd * gaussian(key);
}

// Full noisy KPI evaluation for one cell-minute. Throughput and SINR are
// evaluated on the noisy PRB so the three KPIs stay physically consistent,
// then receive their own additive terms.
inline KpiSample evaluate_kpis(const std::string& cell_id, Minute t, const CellState& state,
                               const CellParams& params, std::uint64_t scenario_seed) {
  KpiSample s;
  s.t_min = t;
  s.cell_id = cell_id;
  s.rrc_users = state.rrc_users;
  double prb = compute_prb(state, params);
  prb = clamp01(prb + kpi_noise(scenario_seed, cell_id, Kpi::Prb, t, params.noise_sd.prb));
  s.prb_util = prb;
  s.sinr_db = compute_sinr(prb, state, params) +
              kpi_noise(scenario_seed, cell_id, Kpi::Sinr, t, params.noise_sd.sinr_db);
  s.thr_mbps = std::max(0.0, compute_throughput(prb, state, params) +
                                 kpi_noise(scenario_seed, cell_id, Kpi::Thr, t,
                                           params.noise_sd.thr_mbps));
  return s;
}

}  // namespace ranassure
