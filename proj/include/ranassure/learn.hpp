// Model Trainer, Model Validator and Predictor internals: deterministic MLP
// training with checkpoints and a small hyperparameter grid, a validation
// gate against the persistence baseline, and autoregressive rollout with
// confidence intervals.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ranassure/data_agents.hpp"
#include "ranassure/digest.hpp"
#include "ranassure/mlp.hpp"

namespace ranassure {

inline constexpr int kForecastHorizon = 10;

struct TrainConfig {
  std::uint64_t seed = 1;
  int tuner_epochs = 300;   // short runs for grid selection
  int train_epochs = 1600;  // final training
  int batch_size = 16;
  int checkpoint_every = 200;
  double weight_decay = 0.0;
  Activation activation = Activation::Tanh;
  bool linear_skip = true;  // input->output shortcut alongside the hidden path
  std::vector<double> lr_grid = {0.01, 0.003};
  std::vector<int> width_grid = {16, 32};

  std::string digest() const {
    std::ostringstream os;
    os << seed << '|' << tuner_epochs << '|' << train_epochs << '|' << batch_size << '|'
       << checkpoint_every << '|' << weight_decay << '|' << activation_name(activation) << '|'
       << linear_skip << '|';
    for (double lr : lr_grid) os << lr << ',';
    os << '|';
    for (int w : width_grid) os << w << ',';
    return sha256_hex(os.str()).substr(0, 16);
  }
};

// Per-window, per-KPI linear trend over the 10 rows (least squares on row
// index). The forecaster decomposes each window into trend + residual: the
// network is trained on detrended inputs to predict the next minute's
// deviation from the extrapolated trend line. The trend carries the
// out-of-range extrapolation, so the bounded network always operates close
// to its training distribution.
struct WindowTrend {
  std::array<double, kKpiCount> intercept{};  // line value at row 0
  std::array<double, kKpiCount> slope{};      // per-row increment

  double line(int k, double row) const { return intercept[k] + slope[k] * row; }
};

inline WindowTrend fit_window_trend(const std::vector<double>& values) {
  WindowTrend tr;
  // rows 0..9: mean row = 4.5, sum (r - 4.5)^2 = 82.5
  for (int k = 0; k < kKpiCount; ++k) {
    double mean = 0.0;
    for (int r = 0; r < kWindowMinutes; ++r) mean += values[r * kKpiCount + k];
    mean /= kWindowMinutes;
    double cov = 0.0;
    for (int r = 0; r < kWindowMinutes; ++r)
      cov += (r - 4.5) * (values[r * kKpiCount + k] - mean);
    tr.slope[k] = cov / 82.5;
    tr.intercept[k] = mean - tr.slope[k] * 4.5;
  }
  return tr;
}

inline std::vector<double> detrend_window(const std::vector<double>& values,
                                          const WindowTrend& tr) {
  std::vector<double> out(values.size());
  for (int r = 0; r < kWindowMinutes; ++r)
    for (int k = 0; k < kKpiCount; ++k)
      out[r * kKpiCount + k] = values[r * kKpiCount + k] - tr.line(k, r);
  return out;
}

// Supervised set: window -> next-minute KPI vector, normalized and raw.
struct TrainingSet {
  std::string cell_id;
  NormStats stats;
  std::vector<FeatureWindow> windows;
  std::vector<std::array<double, kKpiCount>> targets_norm;
  std::vector<std::array<double, kKpiCount>> targets_raw;

  std::size_t size() const { return windows.size(); }

  std::string data_digest() const {
    Sha256 h;
    for (const auto& w : windows) h.update(w.values.data(), w.values.size() * sizeof(double));
    for (const auto& t : targets_norm) h.update(t.data(), t.size() * sizeof(double));
    return to_hex(h.finish()).substr(0, 16);
  }
};

// Builds window/target pairs for all minutes with a full window and a next
// sample, restricted to targets at or before t_max.
inline TrainingSet make_training_set(const std::vector<KpiSample>& series, Minute t_max,
                                     const NormStats& stats) {
  TrainingSet ts;
  if (series.empty()) throw std::invalid_argument("make_training_set: empty series");
  ts.cell_id = series.front().cell_id;
  ts.stats = stats;
  const Minute t0 = series.front().t_min;
  for (std::size_t i = kWindowMinutes - 1; i + 1 < series.size(); ++i) {
    const Minute t_end = t0 + static_cast<Minute>(i);
    if (t_end + 1 > t_max) break;
    ts.windows.push_back(build_window(series, t_end, stats));
    const auto& next = series[i + 1];
    std::array<double, kKpiCount> raw{}, norm{};
    for (int k = 0; k < kKpiCount; ++k) {
      raw[k] = next.kpi(static_cast<Kpi>(k));
      norm[k] = stats.normalize(k, raw[k]);
    }
    ts.targets_raw.push_back(raw);
    ts.targets_norm.push_back(norm);
  }
  return ts;
}

struct ModelMetrics {
  std::array<double, kKpiCount> val_rmse{};          // raw KPI units
  std::array<double, kKpiCount> persistence_rmse{};  // raw KPI units
  std::array<double, kKpiCount> val_resid_q95{};     // raw units, for intervals
  std::array<double, kKpiCount> val_resid_sd{};      // raw units, for CUSUM
  double final_loss = 0.0;
  int val_count = 0;
};

struct ModelArtifact {
  std::string model_id;
  std::string cell_id;
  std::vector<int> layer_dims;
  std::string activation = "tanh";
  Mlp net;
  NormStats stats;
  std::string train_config_digest;
  std::string data_digest;
  ModelMetrics metrics;
  double selected_lr = 0.0;
  bool diverged = false;
  bool approved = false;  // set only by the validation gate

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["model_id"] = model_id;
    j["cell_id"] = cell_id;
    j["layer_dims"] = layer_dims;
    j["activation"] = activation;
    j["net"] = net.to_json();
    j["norm_stats"] = norm_stats_to_json(stats);
    j["train_config_digest"] = train_config_digest;
    j["data_digest"] = data_digest;
    j["metrics"] = nlohmann::ordered_json{{"val_rmse", metrics.val_rmse},
                                          {"persistence_rmse", metrics.persistence_rmse},
                                          {"val_resid_q95", metrics.val_resid_q95},
                                          {"val_resid_sd", metrics.val_resid_sd},
                                          {"final_loss", metrics.final_loss},
                                          {"val_count", metrics.val_count}};
    j["selected_lr"] = selected_lr;
    j["diverged"] = diverged;
    j["approved"] = approved;
    return j;
  }

  static ModelArtifact from_json(const nlohmann::ordered_json& j) {
    ModelArtifact a;
    a.model_id = j.at("model_id").get<std::string>();
    a.cell_id = j.at("cell_id").get<std::string>();
    a.layer_dims = j.at("layer_dims").get<std::vector<int>>();
    a.activation = j.at("activation").get<std::string>();
    a.net = Mlp::from_json(j.at("net"));
    a.stats = norm_stats_from_json(j.at("norm_stats"));
    a.train_config_digest = j.at("train_config_digest").get<std::string>();
    a.data_digest = j.at("data_digest").get<std::string>();
    const auto& m = j.at("metrics");
    for (int k = 0; k < kKpiCount; ++k) {
      a.metrics.val_rmse[k] = m.at("val_rmse").at(k).get<double>();
      a.metrics.persistence_rmse[k] = m.at("persistence_rmse").at(k).get<double>();
      a.metrics.val_resid_q95[k] = m.at("val_resid_q95").at(k).get<double>();
      a.metrics.val_resid_sd[k] = m.at("val_resid_sd").at(k).get<double>();
    }
    a.metrics.final_loss = m.at("final_loss").get<double>();
    a.metrics.val_count = m.at("val_count").get<int>();
    a.selected_lr = j.at("selected_lr").get<double>();
    a.diverged = j.at("diverged").get<bool>();
    a.approved = j.at("approved").get<bool>();
    return a;
  }
};

namespace detail {

struct Split {
  std::vector<std::vector<double>> train_x, val_x;
  std::vector<std::vector<double>> train_y;
  std::vector<std::array<double, kKpiCount>> val_raw;        // raw targets
  std::vector<std::array<double, kKpiCount>> val_last_raw;   // last observed (persistence)
  std::vector<const FeatureWindow*> val_windows;
};

// Deterministic interleaved split (every 4th window to validation), so both
// slices cover all load regimes in the training period. Training inputs are
// detrended windows; targets are next-minute deviations from the
// extrapolated trend line.
inline Split split_training_set(const TrainingSet& ts) {
  Split sp;
  const std::size_t n = ts.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto tr = fit_window_trend(ts.windows[i].values);
    if (i % 4 != 3) {
      std::vector<double> y(kKpiCount);
      for (int k = 0; k < kKpiCount; ++k)
        y[k] = ts.targets_norm[i][k] - tr.line(k, kWindowMinutes);
      sp.train_x.push_back(detrend_window(ts.windows[i].values, tr));
      sp.train_y.push_back(std::move(y));
    } else {
      sp.val_x.push_back(ts.windows[i].values);
      sp.val_raw.push_back(ts.targets_raw[i]);
      std::array<double, kKpiCount> last{};
      for (int k = 0; k < kKpiCount; ++k)
        last[k] = ts.stats.denormalize(k, ts.windows[i].at(kWindowMinutes - 1, k));
      sp.val_last_raw.push_back(last);
      sp.val_windows.push_back(&ts.windows[i]);
    }
  }
  return sp;
}

// One-step prediction in normalized units from a raw (trended) window.
inline std::array<double, kKpiCount> step_predict_norm(const Mlp& net,
                                                       const std::vector<double>& window_values) {
  const auto tr = fit_window_trend(window_values);
  const auto resid = net.forward(detrend_window(window_values, tr));
  std::array<double, kKpiCount> out{};
  for (int k = 0; k < kKpiCount; ++k) out[k] = tr.line(k, kWindowMinutes) + resid[k];
  return out;
}

inline void eval_metrics(const Mlp& net, const Split& sp, const NormStats& stats,
                         ModelMetrics& m) {
  std::array<double, kKpiCount> sq{}, psq{};
  std::array<std::vector<double>, kKpiCount> residuals;
  for (std::size_t i = 0; i < sp.val_x.size(); ++i) {
    auto y = step_predict_norm(net, sp.val_x[i]);
    for (int k = 0; k < kKpiCount; ++k) {
      const double pred = stats.denormalize(k, y[k]);
      const double err = pred - sp.val_raw[i][k];
      const double perr = sp.val_last_raw[i][k] - sp.val_raw[i][k];
      sq[k] += err * err;
      psq[k] += perr * perr;
      residuals[k].push_back(err);
    }
  }
  const double n = static_cast<double>(sp.val_x.size());
  m.val_count = static_cast<int>(sp.val_x.size());
  for (int k = 0; k < kKpiCount; ++k) {
    m.val_rmse[k] = std::sqrt(sq[k] / n);
    m.persistence_rmse[k] = std::sqrt(psq[k] / n);
    auto abs_r = residuals[k];
    for (auto& r : abs_r) r = std::abs(r);
    std::sort(abs_r.begin(), abs_r.end());
    const std::size_t q = static_cast<std::size_t>(std::floor(0.95 * (abs_r.size() - 1)));
    m.val_resid_q95[k] = abs_r.empty() ? 0.0 : abs_r[q];
    double mean = 0;
    for (double r : residuals[k]) mean += r;
    mean /= n;
    double var = 0;
    for (double r : residuals[k]) var += (r - mean) * (r - mean);
    m.val_resid_sd[k] = std::sqrt(var / std::max(1.0, n - 1));
  }
}

}  // namespace detail

// Trains an (unapproved) per-cell artifact: small grid over learning rate and
// hidden width selected by validation RMSE, then a full deterministic run
// with the winning config.
inline ModelArtifact train_model(const TrainingSet& ts, const TrainConfig& cfg) {
  if (ts.size() < 50) throw std::invalid_argument("train_model: fewer than 50 windows");
  auto sp = detail::split_training_set(ts);

  struct Candidate {
    double lr;
    int width;
    double score;
  };
  std::vector<Candidate> grid;
  for (double lr : cfg.lr_grid)
    for (int w : cfg.width_grid) grid.push_back({lr, w, 0.0});

  for (auto& cand : grid) {
    Mlp net({kWindowInputs, cand.width, cand.width, kKpiCount},
            hash_combine(cfg.seed, static_cast<std::uint64_t>(cand.width)), cfg.activation,
            cfg.linear_skip);
    GdConfig gd{cand.lr, cfg.tuner_epochs, cfg.batch_size, 0, cfg.weight_decay};
    auto res = train_gd(net, sp.train_x, sp.train_y, gd);
    if (res.diverged) {
      cand.score = 1e300;
      continue;
    }
    ModelMetrics m;
    detail::eval_metrics(net, sp, ts.stats, m);
    double score = 0;
    for (int k = 0; k < kKpiCount; ++k) score += m.val_rmse[k] / ts.stats.range(k);
    cand.score = score;
  }
  const auto best = *std::min_element(grid.begin(), grid.end(),
                                      [](const Candidate& a, const Candidate& b) {
                                        return a.score < b.score;
                                      });

  ModelArtifact art;
  art.cell_id = ts.cell_id;
  art.layer_dims = {kWindowInputs, best.width, best.width, kKpiCount};
  art.stats = ts.stats;
  art.train_config_digest = cfg.digest();
  art.data_digest = ts.data_digest();
  art.selected_lr = best.lr;

  Mlp net(art.layer_dims, hash_combine(cfg.seed, static_cast<std::uint64_t>(best.width)),
          cfg.activation, cfg.linear_skip);
  GdConfig gd{best.lr, cfg.train_epochs, cfg.batch_size, cfg.checkpoint_every, cfg.weight_decay};
  auto res = train_gd(net, sp.train_x, sp.train_y, gd);
  art.diverged = res.diverged;
  art.activation = activation_name(cfg.activation);
  art.net = std::move(net);
  art.metrics.final_loss = res.final_loss;
  detail::eval_metrics(art.net, sp, ts.stats, art.metrics);
  art.model_id =
      sha256_hex(art.data_digest + art.train_config_digest + art.net.weight_digest()).substr(0, 16);
  return art;
}

// A 10-step forecast with confidence intervals, in denormalized KPI units.
struct ForecastSet {
  std::string cell_id;
  Minute t_origin = 0;  // window end; step s predicts minute t_origin + s
  int horizon = kForecastHorizon;
  std::vector<std::array<double, kKpiCount>> point;  // horizon rows
  std::vector<std::array<double, kKpiCount>> lo;
  std::vector<std::array<double, kKpiCount>> hi;
  std::string model_id;

  double max_kpi(Kpi k) const {
    double m = -1e300;
    for (const auto& row : point) m = std::max(m, row[static_cast<int>(k)]);
    return m;
  }
};

inline bool forecast_within_training_range(const ForecastSet& fc, const NormStats& stats,
                                           double factor) {
  for (const auto& row : fc.point) {
    for (int k = 0; k < kKpiCount; ++k) {
      if (!std::isfinite(row[k])) return false;
      const double center = 0.5 * (stats.min[k] + stats.max[k]);
      if (std::abs(row[k] - center) > factor * stats.range(k)) return false;
    }
  }
  return true;
}

// Autoregressive rollout: step 1 predicts the minute after the window, each
// subsequent step appends its own prediction and drops the oldest row.
// Interval half-width grows with sqrt(step) from the validation residual q95.
inline ForecastSet rollout_unchecked(const ModelArtifact& art, const FeatureWindow& window) {
  if (window.norm_ref != art.stats.id)
    throw std::invalid_argument("forecast_rollout: window normalized with different stats");
  ForecastSet fc;
  fc.cell_id = window.cell_id;
  fc.t_origin = window.t_end;
  fc.model_id = art.model_id;
  std::vector<double> buf = window.values;
  for (int step = 1; step <= kForecastHorizon; ++step) {
    const auto next_norm = detail::step_predict_norm(art.net, buf);
    std::array<double, kKpiCount> p{}, lo{}, hi{};
    for (int k = 0; k < kKpiCount; ++k) {
      p[k] = art.stats.denormalize(k, next_norm[k]);
      const double half = art.metrics.val_resid_q95[k] * std::sqrt(static_cast<double>(step));
      lo[k] = p[k] - half;
      hi[k] = p[k] + half;
    }
    fc.point.push_back(p);
    fc.lo.push_back(lo);
    fc.hi.push_back(hi);
    buf.erase(buf.begin(), buf.begin() + kKpiCount);
    buf.insert(buf.end(), next_norm.begin(), next_norm.end());
  }
  return fc;
}

inline ForecastSet forecast_rollout(const ModelArtifact& art, const FeatureWindow& window) {
  if (!art.approved) throw std::logic_error("forecast_rollout: model not approved");
  return rollout_unchecked(art, window);
}

struct ValidationOutcome {
  bool approved = false;
  std::vector<std::string> reasons;  // empty when approved
};

// Gatekeeping: (a) validation RMSE must not lose to the persistence baseline
// on any KPI, (b) rollout from recent windows must stay finite and inside 3x
// the training range, (c) stored metrics must be reproducible from the
// weights. Rejection is a value, not a fault.
inline ValidationOutcome validate_model(ModelArtifact& art, const TrainingSet& holdout,
                                        double baseline_ratio = 1.0) {
  if (art.approved) throw std::logic_error("validate_model: artifact already approved");
  ValidationOutcome out;
  if (art.diverged) out.reasons.push_back("training diverged");

  auto sp = detail::split_training_set(holdout);
  ModelMetrics fresh;
  detail::eval_metrics(art.net, sp, art.stats, fresh);
  for (int k = 0; k < kKpiCount; ++k) {
    if (fresh.val_rmse[k] > baseline_ratio * fresh.persistence_rmse[k] + 1e-12) {
      out.reasons.push_back(std::string("worse than persistence on ") +
                            kpi_name(static_cast<Kpi>(k)));
    }
    if (std::abs(fresh.val_rmse[k] - art.metrics.val_rmse[k]) > 1e-9)
      out.reasons.push_back(std::string("stored metrics not reproducible for ") +
                            kpi_name(static_cast<Kpi>(k)));
  }

  // Safety filter: rollout on recent holdout windows must stay bounded.
  const std::size_t probes = std::min<std::size_t>(3, sp.val_windows.size());
  for (std::size_t i = 0; i < probes; ++i) {
    const FeatureWindow& w = *sp.val_windows[sp.val_windows.size() - 1 - i];
    auto fc = rollout_unchecked(art, w);
    if (!forecast_within_training_range(fc, art.stats, 3.0)) {
      out.reasons.push_back("rollout instability on holdout window");
      break;
    }
  }

  out.approved = out.reasons.empty();
  art.approved = out.approved;
  return out;
}

// One-step prediction in raw units, used by the drift detector's error monitor.
inline std::array<double, kKpiCount> predict_next(const ModelArtifact& art,
                                                  const FeatureWindow& window) {
  const auto y = detail::step_predict_norm(art.net, window.values);
  std::array<double, kKpiCount> out{};
  for (int k = 0; k < kKpiCount; ++k) out[k] = art.stats.denormalize(k, y[k]);
  return out;
}

}  // namespace ranassure
