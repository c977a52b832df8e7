// Data Collector Agent and Preprocessor & Feature Agent internals: telemetry
// ingestion with schema/unit normalization, gap filling, anomaly tagging and
// fixed-length feature windows.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ranassure/digest.hpp"
#include "ranassure/kpi.hpp"

namespace ranassure {

inline constexpr int kWindowMinutes = 10;
inline constexpr int kWindowInputs = kWindowMinutes * kKpiCount;

// ---------------------------------------------------------------------------
// Ingestion (DCA)
// ---------------------------------------------------------------------------

// One raw telemetry row in long form: (timestamp, cell, KPI name variant, value).
struct RawRow {
  double t = 0.0;  // minutes; aligned to the minute grid on ingest
  std::string cell_id;
  std::string name;
  double value = 0.0;
};

enum class IngestIssue { OutOfRange, Duplicate, Gap, UnknownKpi, NonFinite };

struct IngestRecord {
  IngestIssue issue;
  Minute t_min;
  std::string cell_id;
  std::string detail;
};

struct IngestResult {
  std::vector<KpiSample> samples;       // canonical, sorted by (t, cell)
  std::vector<IngestRecord> records;    // gaps, rejects, duplicate warnings
};

// KPI name alias table: canonical names plus the common vendor variants.
// The scale factor converts the reported unit into the canonical one.
struct KpiAlias {
  Kpi kpi;
  double scale;
};

inline const std::map<std::string, KpiAlias>& kpi_alias_table() {
  static const std::map<std::string, KpiAlias> table = {
      {"rrc", {Kpi::Rrc, 1.0}},
      {"rrc_users", {Kpi::Rrc, 1.0}},
      {"RRC_CONN_USERS", {Kpi::Rrc, 1.0}},
      {"thr_mbps", {Kpi::Thr, 1.0}},
      {"IP_THR_MBPS", {Kpi::Thr, 1.0}},
      {"THROUGHPUT_KBPS", {Kpi::Thr, 1e-3}},
      {"prb", {Kpi::Prb, 1.0}},
      {"prb_util", {Kpi::Prb, 1.0}},
      {"DL_PRB_UTIL", {Kpi::Prb, 1e-2}},  // reported in percent
      {"sinr_db", {Kpi::Sinr, 1.0}},
      {"SINR_DB", {Kpi::Sinr, 1.0}},
  };
  return table;
}

// Maps KPI name variants onto the canonical four, coerces units, aligns
// timestamps to the minute grid and validates ranges. Missing minutes produce
// gap records (filled downstream); duplicates are last-writer-wins.
inline IngestResult ingest_telemetry(const std::vector<RawRow>& rows) {
  IngestResult out;
  // (t, cell) -> per-kpi value
  std::map<std::pair<Minute, std::string>, std::array<std::optional<double>, kKpiCount>> grid;
  const auto& aliases = kpi_alias_table();
  for (const auto& r : rows) {
    const Minute t = static_cast<Minute>(std::lround(r.t));
    auto it = aliases.find(r.name);
    if (it == aliases.end()) {
      out.records.push_back({IngestIssue::UnknownKpi, t, r.cell_id, "unknown kpi name: " + r.name});
      continue;
    }
    double v = r.value * it->second.scale;
    if (!std::isfinite(v)) {
      out.records.push_back({IngestIssue::NonFinite, t, r.cell_id, "non-finite " + r.name});
      continue;
    }
    const Kpi k = it->second.kpi;
    if (k == Kpi::Prb && (v < 0.0 || v > 1.0)) {
      out.records.push_back(
          {IngestIssue::OutOfRange, t, r.cell_id, "prb out of [0,1]: " + std::to_string(v)});
      continue;
    }
    if ((k == Kpi::Rrc || k == Kpi::Thr) && v < 0.0) {
      out.records.push_back({IngestIssue::OutOfRange, t, r.cell_id, "negative " + r.name});
      continue;
    }
    auto& slot = grid[{t, r.cell_id}][static_cast<int>(k)];
    if (slot.has_value()) {
      out.records.push_back({IngestIssue::Duplicate, t, r.cell_id,
                             std::string("duplicate ") + kpi_name(k) + ", keeping last"});
    }
    slot = v;
  }
  // Emit complete samples; flag minute gaps per cell.
  std::map<std::string, Minute> last_t;
  for (const auto& [key, values] : grid) {
    const auto& [t, cell] = key;
    auto lt = last_t.find(cell);
    if (lt != last_t.end() && t > lt->second + 1) {
      for (Minute g = lt->second + 1; g < t; ++g)
        out.records.push_back({IngestIssue::Gap, g, cell, "missing minute"});
    }
    last_t[cell] = t;
    KpiSample s;
    s.t_min = t;
    s.cell_id = cell;
    s.rrc_users = static_cast<int>(std::lround(values[0].value_or(0.0)));
    s.thr_mbps = values[1].value_or(0.0);
    s.prb_util = values[2].value_or(0.0);
    s.sinr_db = values[3].value_or(0.0);
    out.samples.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cleaning and imputation (PFA)
// ---------------------------------------------------------------------------

enum class AnomalyReason { Outlier, MissingFilled, Stuck };

struct AnomalyTag {
  std::string cell_id;
  Minute t_min;
  Kpi kpi;
  double z_score = 0.0;
  AnomalyReason reason = AnomalyReason::Outlier;
};

struct CleanResult {
  std::vector<KpiSample> series;  // gap-free, sorted by t
  std::vector<AnomalyTag> tags;
};

// Fills single-minute gaps by linear interpolation and longer runs by
// last-observation-carried-forward (tagged). Outliers (|z| > 4 against
// trailing 30-minute rolling stats) are tagged but never modified.
inline CleanResult clean_and_impute(const std::vector<KpiSample>& samples,
                                    double outlier_z = 4.0, int rolling_window = 30) {
  if (samples.empty()) throw std::invalid_argument("clean_and_impute: empty series");
  for (std::size_t i = 1; i < samples.size(); ++i)
    if (samples[i].t_min <= samples[i - 1].t_min)
      throw std::invalid_argument("clean_and_impute: series must be sorted by t");

  CleanResult out;
  const std::string cell = samples.front().cell_id;
  std::size_t next = 0;
  for (Minute t = samples.front().t_min; t <= samples.back().t_min; ++t) {
    if (next < samples.size() && samples[next].t_min == t) {
      out.series.push_back(samples[next]);
      ++next;
      continue;
    }
    // Gap at t. Find run length up to the next present sample.
    const KpiSample& prev = out.series.back();
    const KpiSample& after = samples[next];
    const int run = after.t_min - prev.t_min - 1;
    KpiSample filled;
    filled.t_min = t;
    filled.cell_id = cell;
    if (run == 1) {
      // single gap: midpoint
      filled.rrc_users = static_cast<int>(std::lround((prev.rrc_users + after.rrc_users) / 2.0));
      filled.thr_mbps = 0.5 * (prev.thr_mbps + after.thr_mbps);
      filled.prb_util = 0.5 * (prev.prb_util + after.prb_util);
      filled.sinr_db = 0.5 * (prev.sinr_db + after.sinr_db);
    } else {
      filled.rrc_users = prev.rrc_users;
      filled.thr_mbps = prev.thr_mbps;
      filled.prb_util = prev.prb_util;
      filled.sinr_db = prev.sinr_db;
      for (int k = 0; k < kKpiCount; ++k)
        out.tags.push_back({cell, t, static_cast<Kpi>(k), 0.0, AnomalyReason::MissingFilled});
    }
    out.series.push_back(std::move(filled));
  }

  // Rolling z-score outlier tagging on the gap-free series.
  for (int k = 0; k < kKpiCount; ++k) {
    const Kpi kpi = static_cast<Kpi>(k);
    for (std::size_t i = 0; i < out.series.size(); ++i) {
      const std::size_t lo = i >= static_cast<std::size_t>(rolling_window) ? i - rolling_window : 0;
      if (i - lo < 5) continue;  // need a few points of history
      double mean = 0, m2 = 0;
      int n = 0;
      for (std::size_t j = lo; j < i; ++j) {
        const double v = out.series[j].kpi(kpi);
        ++n;
        const double d = v - mean;
        mean += d / n;
        m2 += d * (v - mean);
      }
      const double sd = std::sqrt(m2 / std::max(1, n - 1));
      if (sd <= 1e-12) continue;
      const double z = (out.series[i].kpi(kpi) - mean) / sd;
      if (std::abs(z) > outlier_z)
        out.tags.push_back({cell, out.series[i].t_min, kpi, z, AnomalyReason::Outlier});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Normalization stats and feature windows
// ---------------------------------------------------------------------------

// Min-max stats per KPI, computed once over the training period and stored
// with the model; windows are always normalized with these, never with
// per-window stats. A range floor guards degenerate (constant) KPIs.
struct NormStats {
  std::array<double, kKpiCount> min{};
  std::array<double, kKpiCount> max{};
  std::string id;

  static constexpr std::array<double, kKpiCount> kRangeFloor = {1.0, 0.5, 0.005, 0.1};

  double range(int k) const { return std::max(max[k] - min[k], kRangeFloor[k]); }
  double normalize(int k, double v) const { return (v - min[k]) / range(k); }
  double denormalize(int k, double v) const { return v * range(k) + min[k]; }
};

inline NormStats make_norm_stats(const std::vector<KpiSample>& training_series) {
  if (training_series.empty()) throw std::invalid_argument("make_norm_stats: empty series");
  NormStats st;
  for (int k = 0; k < kKpiCount; ++k) {
    st.min[k] = 1e300;
    st.max[k] = -1e300;
  }
  for (const auto& s : training_series) {
    for (int k = 0; k < kKpiCount; ++k) {
      const double v = s.kpi(static_cast<Kpi>(k));
      st.min[k] = std::min(st.min[k], v);
      st.max[k] = std::max(st.max[k], v);
    }
  }
  std::ostringstream os;
  for (int k = 0; k < kKpiCount; ++k) os << st.min[k] << ',' << st.max[k] << ';';
  st.id = sha256_hex(os.str()).substr(0, 16);
  return st;
}

inline nlohmann::ordered_json norm_stats_to_json(const NormStats& st) {
  return nlohmann::ordered_json{{"min", st.min}, {"max", st.max}, {"id", st.id}};
}

inline NormStats norm_stats_from_json(const nlohmann::ordered_json& j) {
  NormStats st;
  for (int k = 0; k < kKpiCount; ++k) {
    st.min[k] = j.at("min").at(k).get<double>();
    st.max[k] = j.at("max").at(k).get<double>();
  }
  st.id = j.at("id").get<std::string>();
  return st;
}

// A 10x4 matrix of normalized KPIs (rows = minutes t_end-9 .. t_end, columns
// = rrc, thr, prb, sinr), flattened row-major. Flattening order is part of
// the model input contract.
struct FeatureWindow {
  std::string cell_id;
  Minute t_end = 0;
  std::vector<double> values;  // size kWindowInputs
  std::string norm_ref;

  double at(int row, int k) const { return values[row * kKpiCount + k]; }
};

// Builds the window ending at t_end from a gap-free series. Requires at least
// 10 minutes of history ending exactly at t_end.
inline FeatureWindow build_window(const std::vector<KpiSample>& series, Minute t_end,
                                  const NormStats& stats) {
  if (series.empty()) throw std::invalid_argument("build_window: empty series");
  const Minute t0 = series.front().t_min;
  const long idx_end = t_end - t0;
  if (idx_end + 1 < kWindowMinutes || idx_end >= static_cast<long>(series.size()))
    throw std::invalid_argument("build_window: insufficient history ending at t_end");
  FeatureWindow w;
  w.cell_id = series.front().cell_id;
  w.t_end = t_end;
  w.norm_ref = stats.id;
  w.values.reserve(kWindowInputs);
  for (long i = idx_end - kWindowMinutes + 1; i <= idx_end; ++i) {
    const auto& s = series[static_cast<std::size_t>(i)];
    if (s.t_min != t0 + static_cast<Minute>(i))
      throw std::invalid_argument("build_window: series has gaps");
    for (int k = 0; k < kKpiCount; ++k) {
      const double v = stats.normalize(k, s.kpi(static_cast<Kpi>(k)));
      if (!std::isfinite(v)) throw std::invalid_argument("build_window: non-finite value");
      w.values.push_back(v);
    }
  }
  return w;
}

// All windows over a series (t_end from the 10th minute onwards): exactly
// len(series) - 9 windows.
inline std::vector<FeatureWindow> build_windows(const std::vector<KpiSample>& series,
                                                const NormStats& stats) {
  std::vector<FeatureWindow> out;
  if (static_cast<int>(series.size()) < kWindowMinutes) return out;
  for (std::size_t i = kWindowMinutes - 1; i < series.size(); ++i)
    out.push_back(build_window(series, series[i].t_min, stats));
  return out;
}

}  // namespace ranassure
