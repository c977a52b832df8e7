// Scenario runner and experiment harness: executes baseline / no-agent /
// agentic modes, writes the run artifacts (telemetry CSV, decision and audit
// logs, report, per-KPI SVG figures), compares runs and calibrates the cell
// coefficients against reported aggregate targets.
#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ranassure/runtime.hpp"

namespace ranassure {

struct CellAggregates {
  double mean_rrc = 0, mean_thr = 0, mean_prb = 0, p95_prb = 0, mean_sinr = 0;
};

inline CellAggregates aggregates_over(const std::vector<KpiSample>& series, Minute from,
                                      Minute to) {
  CellAggregates a;
  std::vector<double> prbs;
  int n = 0;
  for (const auto& s : series) {
    if (s.t_min < from || s.t_min > to) continue;
    a.mean_rrc += s.rrc_users;
    a.mean_thr += s.thr_mbps;
    a.mean_prb += s.prb_util;
    a.mean_sinr += s.sinr_db;
    prbs.push_back(s.prb_util);
    ++n;
  }
  if (n == 0) return a;
  a.mean_rrc /= n;
  a.mean_thr /= n;
  a.mean_prb /= n;
  a.mean_sinr /= n;
  std::sort(prbs.begin(), prbs.end());
  a.p95_prb = prbs[static_cast<std::size_t>(std::floor(0.95 * (prbs.size() - 1)))];
  return a;
}

struct RunReport {
  std::string mode;
  std::string scenario_name;
  std::string scenario_digest;
  std::uint64_t seed = 0;
  Minute eval_start = 0, eval_end = 0;
  std::map<std::string, CellAggregates> eval;  // over the eval window
  std::map<std::string, CellAggregates> pre;   // 30 minutes before the eval window
  nlohmann::ordered_json deployment;           // deployment / refusal summary
  std::string transcript_digest;
  double runtime_seconds = 0;
  std::vector<std::string> artifacts;

  nlohmann::ordered_json to_json() const {
    auto agg = [](const CellAggregates& a) {
      return nlohmann::ordered_json{{"mean_rrc", a.mean_rrc}, {"mean_thr", a.mean_thr},
                                    {"mean_prb", a.mean_prb}, {"p95_prb", a.p95_prb},
                                    {"mean_sinr", a.mean_sinr}};
    };
    nlohmann::ordered_json ev, pr;
    for (const auto& [cell, a] : eval) ev[cell] = agg(a);
    for (const auto& [cell, a] : pre) pr[cell] = agg(a);
    return nlohmann::ordered_json{{"mode", mode},
                                  {"scenario_name", scenario_name},
                                  {"scenario_digest", scenario_digest},
                                  {"seed", seed},
                                  {"eval_window", {{"start", eval_start}, {"end", eval_end}}},
                                  {"eval", ev},
                                  {"pre", pr},
                                  {"deployment", deployment},
                                  {"transcript_digest", transcript_digest},
                                  {"runtime_seconds", runtime_seconds},
                                  {"artifacts", artifacts}};
  }
};

// The report is a pure function of the telemetry and the scenario windows.
inline void fill_aggregates(RunReport& report, const TelemetryLog& log,
                            const ScenarioConfig& cfg) {
  report.eval_start = cfg.eval_start;
  report.eval_end = cfg.eval_end;
  for (const auto& c : cfg.cells) {
    auto series = log.cell_series(c.cell_id);
    report.eval[c.cell_id] = aggregates_over(series, cfg.eval_start, cfg.eval_end);
    report.pre[c.cell_id] = aggregates_over(series, cfg.eval_start - 30, cfg.eval_start - 1);
  }
}

// ---------------------------------------------------------------------------
// SVG figures: one file per KPI, exactly three polyline traces (baseline,
// no-agent, agentic) of the surge cell.
// ---------------------------------------------------------------------------

inline std::string svg_figure(Kpi kpi, const std::vector<const TelemetryLog*>& logs,
                              const std::vector<std::string>& labels, const std::string& cell) {
  constexpr int W = 860, H = 320, ML = 60, MR = 20, MT = 30, MB = 40;
  double lo = 1e300, hi = -1e300;
  Minute t_max = 0;
  std::vector<std::vector<double>> traces;
  for (const auto* log : logs) {
    std::vector<double> tr;
    for (const auto& s : log->samples) {
      if (s.cell_id != cell) continue;
      tr.push_back(s.kpi(kpi));
      t_max = std::max(t_max, s.t_min);
    }
    for (double v : tr) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    traces.push_back(std::move(tr));
  }
  if (hi <= lo) hi = lo + 1;
  const double span = hi - lo;
  lo -= 0.05 * span;
  hi += 0.05 * span;
  auto x = [&](double t) { return ML + (W - ML - MR) * t / std::max(1, static_cast<int>(t_max)); };
  auto y = [&](double v) { return H - MB - (H - MT - MB) * (v - lo) / (hi - lo); };

  static const char* colors[] = {"#4878cf", "#d65f5f", "#6acc65"};
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  os << "  <rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  os << "  <line x1=\"" << ML << "\" y1=\"" << H - MB << "\" x2=\"" << W - MR << "\" y2=\""
     << H - MB << "\" stroke=\"#333\"/>\n";
  os << "  <line x1=\"" << ML << "\" y1=\"" << MT << "\" x2=\"" << ML << "\" y2=\"" << H - MB
     << "\" stroke=\"#333\"/>\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", lo + 0.05 * span);
  os << "  <text x=\"6\" y=\"" << H - MB << "\" font-size=\"11\">" << buf << "</text>\n";
  std::snprintf(buf, sizeof(buf), "%.3g", hi - 0.05 * span);
  os << "  <text x=\"6\" y=\"" << MT + 10 << "\" font-size=\"11\">" << buf << "</text>\n";
  os << "  <text x=\"" << W / 2 - 40 << "\" y=\"" << H - 8 << "\" font-size=\"12\">minute</text>\n";
  os << "  <text x=\"" << ML << "\" y=\"16\" font-size=\"13\">" << kpi_name(kpi) << " ("
     << cell << ")</text>\n";
  for (std::size_t i = 0; i < traces.size(); ++i) {
    os << "  <polyline fill=\"none\" stroke=\"" << colors[i % 3] << "\" stroke-width=\"1.4\" points=\"";
    for (std::size_t t = 0; t < traces[i].size(); ++t) {
      if (t) os << ' ';
      os << x(static_cast<double>(t)) << ',' << y(traces[i][t]);
    }
    os << "\"/>\n";
    os << "  <text x=\"" << W - MR - 150 << "\" y=\"" << MT + 14 * (i + 1)
       << "\" font-size=\"11\" fill=\"" << colors[i % 3] << "\">" << labels[i] << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// cmd_run
// ---------------------------------------------------------------------------

struct RunArtifacts {
  RunReport report;
  PipelineResult result;
};

inline void write_decisions_jsonl(const std::vector<DecisionLine>& decisions,
                                  const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& d : decisions) {
    nlohmann::ordered_json j{{"t_min", d.t_min}, {"type", d.type}, {"body", d.body}};
    out << j.dump() << '\n';
  }
}

inline std::string report_markdown(const RunReport& r) {
  std::ostringstream os;
  os << "# Run report: " << r.scenario_name << " (" << r.mode << ")\n\n";
  os << "- seed: " << r.seed << "\n- scenario digest: " << r.scenario_digest << "\n";
  os << "- eval window: t=" << r.eval_start << ".." << r.eval_end << " (inclusive)\n";
  os << "- transcript digest: "
     << (r.transcript_digest.empty() ? std::string("(no pipeline)") : r.transcript_digest) << "\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", r.runtime_seconds);
  os << "- runtime: " << buf << " s\n\n";
  auto table = [&os](const std::string& title,
                     const std::map<std::string, CellAggregates>& rows) {
    os << "## " << title << "\n\n";
    os << "| cell | mean rrc | mean thr (Mbps) | mean prb | p95 prb | mean sinr (dB) |\n";
    os << "|------|---------:|----------------:|---------:|--------:|---------------:|\n";
    char line[256];
    for (const auto& [cell, a] : rows) {
      std::snprintf(line, sizeof(line), "| %s | %.1f | %.2f | %.4f | %.4f | %.2f |\n",
                    cell.c_str(), a.mean_rrc, a.mean_thr, a.mean_prb, a.p95_prb, a.mean_sinr);
      os << line;
    }
    os << "\n";
  };
  table("Pre-deployment window (30 min before eval)", r.pre);
  table("Evaluation window", r.eval);
  os << "## Deployment\n\n";
  os << "```json\n" << r.deployment.dump(2) << "\n```\n\n";
  os << "## Artifacts\n\n";
  for (const auto& a : r.artifacts) os << "- " << a << "\n";
  return os.str();
}

inline RunArtifacts cmd_run(const ScenarioConfig& scenario, RunMode mode,
                            const std::string& out_dir, bool wire_mode = false) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const auto started = std::chrono::steady_clock::now();

  RunArtifacts out;
  out.result = run_pipeline(scenario, mode, wire_mode);
  if (!out.result.outcome.completed)
    throw std::runtime_error("run aborted: " + out.result.outcome.error);

  // The three-trace figures need all modes; reuse this run's log for its own
  // mode and compute the other two deterministically.
  std::map<RunMode, TelemetryLog> logs;
  logs[mode] = out.result.outcome.log;
  for (RunMode m : {RunMode::Baseline, RunMode::NoAgent, RunMode::Agentic}) {
    if (logs.count(m)) continue;
    logs[m] = run_pipeline(scenario, m, false).outcome.log;
  }

  RunReport& report = out.report;
  report.mode = run_mode_name(mode);
  report.scenario_name = scenario.name;
  report.scenario_digest = sha256_hex(scenario_digest_input(scenario)).substr(0, 16);
  report.seed = scenario.seed;
  report.transcript_digest = out.result.transcript_digest;
  fill_aggregates(report, out.result.outcome.log, scenario);

  report.deployment = nlohmann::ordered_json{{"deployed", false}, {"refused", false}};
  for (const auto& d : out.result.decisions) {
    if (d.type == "deployment") {
      report.deployment["deployed"] = true;
      report.deployment["policy"] = d.body;
    } else if (d.type == "refusal") {
      report.deployment["refused"] = true;
      report.deployment["refusal"] = d.body;
    } else if (d.type == "verdict") {
      report.deployment["verdict"] = d.body;
    }
  }

  const std::string csv_path = out_dir + "/telemetry.csv";
  {
    std::ofstream csv(csv_path, std::ios::binary);
    csv << telemetry_to_csv(out.result.outcome.log);
  }
  write_decisions_jsonl(out.result.decisions, out_dir + "/decisions.jsonl");
  write_audit_jsonl(out.result.audit, out_dir + "/audit.jsonl");
  save_scenario(scenario, out_dir + "/scenario.json");
  report.artifacts = {csv_path, out_dir + "/decisions.jsonl", out_dir + "/audit.jsonl",
                      out_dir + "/scenario.json"};

  const std::vector<const TelemetryLog*> fig_logs = {&logs[RunMode::Baseline],
                                                     &logs[RunMode::NoAgent],
                                                     &logs[RunMode::Agentic]};
  const std::vector<std::string> fig_labels = {"baseline", "no_agent", "agentic"};
  for (int k = 0; k < kKpiCount; ++k) {
    const Kpi kpi = static_cast<Kpi>(k);
    const std::string path = out_dir + "/fig_" + kpi_name(kpi) + ".svg";
    std::ofstream svg(path);
    svg << svg_figure(kpi, fig_logs, fig_labels, scenario.surge.cell_id);
    report.artifacts.push_back(path);
  }

  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  {
    std::ofstream rj(out_dir + "/run.json");
    rj << report.to_json().dump(2) << '\n';
  }
  {
    std::ofstream md(out_dir + "/report.md");
    md << report_markdown(report);
  }
  report.artifacts.push_back(out_dir + "/run.json");
  report.artifacts.push_back(out_dir + "/report.md");
  return out;
}

// ---------------------------------------------------------------------------
// cmd_compare
// ---------------------------------------------------------------------------

struct LoadedRun {
  std::string dir;
  std::string mode;
  std::string scenario_digest;
  ScenarioConfig scenario;
  TelemetryLog log;
};

inline LoadedRun load_run_dir(const std::string& dir) {
  LoadedRun run;
  run.dir = dir;
  std::ifstream rj(dir + "/run.json");
  if (!rj) throw std::runtime_error("not a run directory (missing run.json): " + dir);
  auto j = nlohmann::json::parse(rj);
  run.mode = j.at("mode").get<std::string>();
  run.scenario_digest = j.at("scenario_digest").get<std::string>();
  run.scenario = load_scenario(dir + "/scenario.json");
  run.log = load_telemetry_csv(dir + "/telemetry.csv");
  return run;
}

inline std::string cmd_compare(const std::vector<std::string>& run_dirs,
                               const std::string& out_dir) {
  if (run_dirs.size() < 2) throw std::invalid_argument("compare needs at least two run dirs");
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  std::vector<LoadedRun> runs;
  for (const auto& d : run_dirs) runs.push_back(load_run_dir(d));
  for (const auto& r : runs) {
    if (r.scenario_digest != runs[0].scenario_digest)
      throw std::invalid_argument("compare: run " + r.dir + " used a different scenario");
  }

  const auto& cfg = runs[0].scenario;
  std::ostringstream md;
  md << "# Run comparison (" << cfg.name << ")\n\n";
  md << "Eval window t=" << cfg.eval_start << ".." << cfg.eval_end
     << "; deltas are relative to `" << runs[0].mode << "`.\n\n";
  // aggregates recomputed from the CSV alone
  std::vector<std::map<std::string, CellAggregates>> aggs;
  for (const auto& r : runs) {
    std::map<std::string, CellAggregates> a;
    for (const auto& c : cfg.cells)
      a[c.cell_id] = aggregates_over(r.log.cell_series(c.cell_id), cfg.eval_start, cfg.eval_end);
    aggs.push_back(std::move(a));
  }
  for (const auto& c : cfg.cells) {
    md << "## " << c.cell_id << "\n\n| run | mean rrc | mean thr | mean prb | p95 prb | mean sinr |";
    md << "\n|-----|---------:|---------:|---------:|--------:|----------:|\n";
    char line[256];
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const auto& a = aggs[i].at(c.cell_id);
      std::snprintf(line, sizeof(line), "| %s | %.1f | %.2f | %.4f | %.4f | %.2f |\n",
                    runs[i].mode.c_str(), a.mean_rrc, a.mean_thr, a.mean_prb, a.p95_prb,
                    a.mean_sinr);
      md << line;
    }
    const auto& base = aggs[0].at(c.cell_id);
    md << "\ndeltas vs " << runs[0].mode << ":\n\n";
    for (std::size_t i = 1; i < runs.size(); ++i) {
      const auto& a = aggs[i].at(c.cell_id);
      auto pct = [](double v, double b) { return b == 0 ? 0.0 : 100.0 * (v - b) / b; };
      std::snprintf(line, sizeof(line),
                    "- %s: rrc %+0.1f%%, thr %+0.1f%%, prb %+0.1f%%, sinr %+0.2f dB\n",
                    runs[i].mode.c_str(), pct(a.mean_rrc, base.mean_rrc),
                    pct(a.mean_thr, base.mean_thr), pct(a.mean_prb, base.mean_prb),
                    a.mean_sinr - base.mean_sinr);
      md << line;
    }
    md << "\n";
  }

  std::vector<const TelemetryLog*> logs;
  std::vector<std::string> labels;
  for (const auto& r : runs) {
    logs.push_back(&r.log);
    labels.push_back(r.mode);
  }
  for (int k = 0; k < kKpiCount; ++k) {
    const Kpi kpi = static_cast<Kpi>(k);
    std::ofstream svg(out_dir + "/compare_" + kpi_name(kpi) + ".svg");
    svg << svg_figure(kpi, logs, labels, cfg.surge.cell_id);
  }
  const std::string table = md.str();
  std::ofstream out(out_dir + "/compare.md");
  out << table;
  return table;
}

// ---------------------------------------------------------------------------
// cmd_calibrate
// ---------------------------------------------------------------------------

struct CalibrationTargets {
  double rrc_pre = 175.1, rrc_post = 157.1;
  double thr_pre = 59.9, thr_post = 72.4;
  double prb_pre = 0.671, prb_post = 0.598;
  double nb_prb_pre = 0.413, nb_prb_post = 0.586, nb_prb_p95 = 0.663;
  double sinr_delta = 1.14;
  double capacity = 200.0;

  static CalibrationTargets from_json(const nlohmann::json& j) {
    CalibrationTargets t;
    t.rrc_pre = j.value("rrc_pre", t.rrc_pre);
    t.rrc_post = j.value("rrc_post", t.rrc_post);
    t.thr_pre = j.value("thr_pre", t.thr_pre);
    t.thr_post = j.value("thr_post", t.thr_post);
    t.prb_pre = j.value("prb_pre", t.prb_pre);
    t.prb_post = j.value("prb_post", t.prb_post);
    t.nb_prb_pre = j.value("nb_prb_pre", t.nb_prb_pre);
    t.nb_prb_post = j.value("nb_prb_post", t.nb_prb_post);
    t.nb_prb_p95 = j.value("nb_prb_p95", t.nb_prb_p95);
    t.sinr_delta = j.value("sinr_delta", t.sinr_delta);
    t.capacity = j.value("capacity", t.capacity);
    return t;
  }
};

struct CalibrationResult {
  double prb_per_ue = 0.0;
  double efficiency = 0.0;
  double sinr_slope = 0.0;
  std::vector<std::string> residual_lines;
  bool consistent = true;
  std::string report;
};

// Solves the coefficient set from the aggregate pairs and reports the
// residuals against every remaining target. Inconsistent aggregates are
// reported, not hidden.
inline CalibrationResult cmd_calibrate(const CalibrationTargets& t, ScenarioConfig& scenario,
                                       double tolerance = 0.15) {
  CalibrationResult res;
  res.prb_per_ue = t.prb_pre / t.rrc_pre;
  res.efficiency = t.thr_post / (t.capacity * (1.0 - t.prb_post));
  res.sinr_slope = t.sinr_delta / (t.prb_pre - t.prb_post);

  std::ostringstream os;
  char line[200];
  std::snprintf(line, sizeof(line), "prb_per_ue  = %.6f  (from %.1f users -> prb %.3f)\n",
                res.prb_per_ue, t.rrc_pre, t.prb_pre);
  os << line;
  std::snprintf(line, sizeof(line), "efficiency  = %.4f    (from thr %.1f at prb %.3f, cap %.0f)\n",
                res.efficiency, t.thr_post, t.prb_post, t.capacity);
  os << line;
  std::snprintf(line, sizeof(line), "sinr_slope  = %.3f dB/PRB (from +%.2f dB over %.3f PRB)\n",
                res.sinr_slope, t.sinr_delta, t.prb_pre - t.prb_post);
  os << line;
  os << "\nresiduals against the remaining aggregates:\n";

  auto residual = [&](const std::string& name, double implied, double target) {
    const double rel = target != 0 ? std::abs(implied - target) / std::abs(target) : 0.0;
    std::snprintf(line, sizeof(line), "  %-28s implied %8.3f vs target %8.3f (%.1f%%)%s\n",
                  name.c_str(), implied, target, 100 * rel,
                  rel > tolerance ? "  <-- inconsistent" : "");
    os << line;
    res.residual_lines.push_back(line);
    if (rel > tolerance) res.consistent = false;
  };
  residual("prb_post from rrc_post", res.prb_per_ue * t.rrc_post, t.prb_post);
  residual("thr_pre from prb_pre", t.capacity * (1 - t.prb_pre) * res.efficiency, t.thr_pre);
  // Neighbor aggregates: the marginal PRB cost implied by the neighbor's own
  // rise does not reconcile with its pre-deployment level under one linear
  // coefficient; report the residual instead of forcing a fit.
  const double moved = t.rrc_pre - t.rrc_post;
  const double nb_slope_implied = (t.nb_prb_post - t.nb_prb_pre) / moved;
  residual("nb prb_pre from nb slope", nb_slope_implied * 80.0, t.nb_prb_pre);

  scenario.cells[0].params.prb_per_ue = res.prb_per_ue;
  scenario.cells[0].params.efficiency = res.efficiency;
  scenario.cells[0].params.sinr_slope_db = res.sinr_slope;
  scenario.cells[1].params.efficiency = res.efficiency;
  scenario.cells[1].params.sinr_slope_db = res.sinr_slope;

  os << (res.consistent ? "\nall aggregates reconcile within tolerance\n"
                        : "\nsome aggregates cannot be reconciled by this model; see above\n");
  res.report = os.str();
  return res;
}

}  // namespace ranassure
