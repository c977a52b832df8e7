// The thirteen pipeline agents. Control flow runs entirely over the message
// bus; bulk data (telemetry series, trained artifacts) lives in run-scoped
// stores that agents reference by id, so checkpoints stay small and restarts
// are cheap and deterministic.
#pragma once

#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ranassure/assure.hpp"
#include "ranassure/audit.hpp"
#include "ranassure/bus.hpp"
#include "ranassure/data_agents.hpp"
#include "ranassure/learn.hpp"
#include "ranassure/message.hpp"
#include "ranassure/scenario.hpp"
#include "ranassure/sim.hpp"
#include "ranassure/stats.hpp"

namespace ranassure {

// Agent ids, fixed across the pipeline.
namespace agent_id {
inline constexpr const char* kOrchestrator = "oa";
inline constexpr const char* kDataCollector = "dca";
inline constexpr const char* kPreprocessor = "pfa";
inline constexpr const char* kTrainer = "mta";
inline constexpr const char* kValidator = "mva";
inline constexpr const char* kPredictor = "pa";
inline constexpr const char* kPolicyGenerator = "pga";
inline constexpr const char* kBaseline = "sba";
inline constexpr const char* kVerifier = "va";
inline constexpr const char* kDeployment = "da";
inline constexpr const char* kDriftDetector = "dda";
inline constexpr const char* kAudit = "aea";
inline constexpr const char* kSecurity = "sa";
}  // namespace agent_id

enum class RunMode { Baseline, NoAgent, Agentic };

inline const char* run_mode_name(RunMode m) {
  switch (m) {
    case RunMode::Baseline: return "baseline";
    case RunMode::NoAgent: return "no_agent";
    case RunMode::Agentic: return "agentic";
  }
  return "?";
}

// Run-scoped data plane: validated raw and cleaned telemetry per cell.
struct TelemetryStore {
  std::map<std::string, std::vector<KpiSample>> raw;
  std::map<std::string, std::vector<KpiSample>> cleaned;
  std::vector<AnomalyTag> tags;
  std::vector<IngestRecord> ingest_records;

  const std::vector<KpiSample>& cleaned_series(const std::string& cell) const {
    static const std::vector<KpiSample> empty;
    auto it = cleaned.find(cell);
    return it == cleaned.end() ? empty : it->second;
  }
};

// Run-scoped model plane: artifacts and their training sets by model id.
struct ModelStore {
  std::map<std::string, ModelArtifact> artifacts;
  std::map<std::string, TrainingSet> training_sets;
  std::map<std::string, std::string> approved_by_cell;  // cell -> model_id
};

struct DecisionLine {
  Minute t_min = 0;
  std::string type;  // verdict | drift_alert | deployment | refusal | integrity_alert | rollback
  nlohmann::ordered_json body;
};

struct RecoveryEvent {
  Minute t_min = 0;
  std::string agent;
  bool recovered = false;  // false = degraded (skipped phase)
};

struct WorkflowTrigger {
  std::string trigger_id;
  std::string cause;  // kpi_degradation | anomaly | scheduled | operator
  std::vector<std::string> scope;
  Minute t_min = 0;

  bool overlaps(const WorkflowTrigger& other) const {
    for (const auto& a : scope)
      for (const auto& b : other.scope)
        if (a == b) return true;
    return false;
  }
};

class PipelineRuntime;  // declared in runtime.hpp

// Everything an agent may touch while handling a tick. The runtime owns all
// of it; agents never talk to the simulator directly.
struct AgentContext {
  Minute t = 0;
  RunMode mode = RunMode::Agentic;
  const ScenarioConfig* scenario = nullptr;
  const std::vector<KpiSample>* fresh = nullptr;  // this minute's samples
  MessageBus* bus = nullptr;
  TelemetryStore* telemetry = nullptr;
  ModelStore* models = nullptr;
  AuditChain* audit = nullptr;
  std::vector<DecisionLine>* decisions = nullptr;
  // Deployment surface: installs/removes the offload directive on the engine.
  std::function<void(const OffloadDirective&)> install_directive;
  std::function<void()> remove_directive;
  std::function<bool()> directive_active;

  void send(const std::string& sender, const std::string& recipient, MsgKind kind,
            nlohmann::json payload) const {
    AgentMessage m;
    m.t_min = t;
    m.sender = sender;
    m.recipient = recipient;
    m.kind = kind;
    m.payload = std::move(payload);
    bus->send(std::move(m));
  }

  void decision(const std::string& type, nlohmann::ordered_json body) const {
    decisions->push_back({t, type, std::move(body)});
  }
};

class Agent {
 public:
  virtual ~Agent() = default;
  virtual std::string id() const = 0;
  virtual AgentDescriptor descriptor() const = 0;
  // Called once per tick in the agent's phase, before mail processing.
  virtual void on_tick(AgentContext&) {}
  virtual void handle(const AgentMessage&, AgentContext&) {}
  virtual nlohmann::json checkpoint() const { return nlohmann::json::object(); }
  virtual void restore(const nlohmann::json&) {}
};

// ---------------------------------------------------------------------------
// Orchestrator Agent: maps triggers to workflow runs, serializes overlapping
// scopes, schedules the training job and the optimization pipeline.
// ---------------------------------------------------------------------------
class OrchestratorAgent : public Agent {
 public:
  std::string id() const override { return agent_id::kOrchestrator; }
  AgentDescriptor descriptor() const override {
    return {id(), {MsgKind::Control, MsgKind::Verdict}, {MsgKind::Control}, AgentStatus::Alive};
  }

  void on_tick(AgentContext& ctx) override {
    const auto& cfg = *ctx.scenario;
    // Scheduled training trigger once the training period is complete.
    if (!train_dispatched_ && ctx.t == cfg.pipeline.train_end_min) {
      WorkflowTrigger trig{"trig-train", "scheduled", {}, ctx.t};
      enqueue(trig);
      train_dispatched_ = true;
    }
    // KPI degradation trigger: this minute's monitoring signal from the
    // surge cell arrives with the tick.
    const KpiSample* last = nullptr;
    if (ctx.fresh)
      for (const auto& s : *ctx.fresh)
        if (s.cell_id == cfg.surge.cell_id) last = &s;
    if (!decision_reached_ && last && models_ready_ && !ctx.directive_active()) {
      const bool degraded = last->prb_util > cfg.guardrails.prb_trigger;
      if (degraded && ctx.t > cfg.pipeline.train_end_min) {
        WorkflowTrigger trig{"trig-kpi-" + std::to_string(ctx.t), "kpi_degradation",
                             {cfg.surge.cell_id, cfg.neighbor_cell().cell_id}, ctx.t};
        enqueue(trig);
      }
    }
    // Serialize: dispatch at most one trigger whose scope is free.
    dispatch_next(ctx);
  }

  void handle(const AgentMessage& m, AgentContext& ctx) override {
    if (m.kind == MsgKind::Control && m.payload.value("event", "") == "models_ready") {
      models_ready_ = true;
    }
    if (m.kind == MsgKind::Control && m.payload.value("event", "") == "pipeline_resolved") {
      if (active_) {
        if (m.payload.value("decisive", false)) decision_reached_ = true;
        active_.reset();
      }
    }
    if (m.kind == MsgKind::Verdict) {
      // Verdicts also resolve the active optimization trigger.
      if (active_ && active_->cause == "kpi_degradation") {
        decision_reached_ = true;
        active_.reset();
      }
    }
    (void)ctx;
  }

  nlohmann::json checkpoint() const override {
    return nlohmann::json{{"train_dispatched", train_dispatched_},
                          {"models_ready", models_ready_},
                          {"decision_reached", decision_reached_},
                          {"queued", queued_.size()},
                          {"active", active_.has_value()}};
  }
  void restore(const nlohmann::json& j) override {
    train_dispatched_ = j.value("train_dispatched", false);
    models_ready_ = j.value("models_ready", false);
    decision_reached_ = j.value("decision_reached", false);
  }

  bool decision_reached() const { return decision_reached_; }

 private:
  void enqueue(const WorkflowTrigger& trig) {
    if (active_ && active_->overlaps(trig)) return;  // serialized: drop duplicates in flight
    for (const auto& q : queued_)
      if (q.overlaps(trig) && q.cause == trig.cause) return;
    queued_.push_back(trig);
  }

  void dispatch_next(AgentContext& ctx) {
    if (active_ || queued_.empty()) return;
    active_ = queued_.front();
    queued_.pop_front();
    if (active_->cause == "scheduled") {
      ctx.send(id(), agent_id::kTrainer, MsgKind::Control,
               nlohmann::json{{"event", "train"},
                              {"train_end_min", ctx.scenario->pipeline.train_end_min},
                              {"trigger_id", active_->trigger_id}});
      // The training workflow resolves within the tick.
      active_.reset();
    } else {
      ctx.send(id(), agent_id::kPredictor, MsgKind::Control,
               nlohmann::json{{"event", "optimize"},
                              {"trigger_id", active_->trigger_id},
                              {"cells", active_->scope}});
    }
  }

  bool train_dispatched_ = false;
  bool models_ready_ = false;
  bool decision_reached_ = false;
  std::optional<WorkflowTrigger> active_;
  std::deque<WorkflowTrigger> queued_;
};

// ---------------------------------------------------------------------------
// Data Collector Agent: simulator connector, schema validation, integrity
// records, append to the validated store.
// ---------------------------------------------------------------------------
class DataCollectorAgent : public Agent {
 public:
  std::string id() const override { return agent_id::kDataCollector; }
  AgentDescriptor descriptor() const override {
    return {id(), {MsgKind::Control}, {MsgKind::Telemetry}, AgentStatus::Alive};
  }

  // The runtime feeds the simulator's minute batch through the connector.
  void collect(const std::vector<KpiSample>& minute, AgentContext& ctx) {
    std::vector<RawRow> rows;
    for (const auto& s : minute) {
      const double t = static_cast<double>(s.t_min);
      rows.push_back({t, s.cell_id, "rrc", static_cast<double>(s.rrc_users)});
      rows.push_back({t, s.cell_id, "thr_mbps", s.thr_mbps});
      rows.push_back({t, s.cell_id, "prb", s.prb_util});
      rows.push_back({t, s.cell_id, "sinr_db", s.sinr_db});
    }
    auto res = ingest_telemetry(rows);
    for (auto& rec : res.records) ctx.telemetry->ingest_records.push_back(rec);
    nlohmann::json cells = nlohmann::json::array();
    for (auto& s : res.samples) {
      ctx.telemetry->raw[s.cell_id].push_back(s);
      cells.push_back(s.cell_id);
      last_t_ = s.t_min;
    }
    ctx.send(id(), agent_id::kPreprocessor, MsgKind::Telemetry,
             nlohmann::json{{"t", ctx.t}, {"cells", cells}, {"validated", res.records.empty()}});
  }

  nlohmann::json checkpoint() const override { return nlohmann::json{{"last_t", last_t_}}; }
  void restore(const nlohmann::json& j) override { last_t_ = j.value("last_t", -1); }

 private:
  Minute last_t_ = -1;
};

// ---------------------------------------------------------------------------
// Preprocessor & Feature Agent: cleaning, imputation, anomaly tags, cleaned
// series maintenance.
// ---------------------------------------------------------------------------
class PreprocessorAgent : public Agent {
 public:
  std::string id() const override { return agent_id::kPreprocessor; }
  AgentDescriptor descriptor() const override {
    return {id(), {MsgKind::Telemetry, MsgKind::Model}, {MsgKind::Features}, AgentStatus::Alive};
  }

  void handle(const AgentMessage& m, AgentContext& ctx) override {
    if (m.kind != MsgKind::Telemetry) return;
    for (const auto& c : ctx.scenario->cells) {
      const auto& raw = ctx.telemetry->raw[c.cell_id];
      if (raw.empty()) continue;
      auto res = clean_and_impute(raw);
      ctx.telemetry->cleaned[c.cell_id] = std::move(res.series);
      // keep only fresh tags to avoid duplicates
      for (const auto& tag : res.tags)
        if (tag.t_min == ctx.t) ctx.telemetry->tags.push_back(tag);
    }
    const bool window_ready =
        static_cast<int>(ctx.telemetry->cleaned_series(ctx.scenario->surge.cell_id).size()) >=
        kWindowMinutes;
    ctx.send(id(), agent_id::kPredictor, MsgKind::Features,
             nlohmann::json{{"t", ctx.t}, {"window_ready", window_ready}});
  }
};

// ---------------------------------------------------------------------------
// Model Trainer Agent: deterministic training with checkpoints and the
// hyperparameter grid; per-cell artifacts.
// ---------------------------------------------------------------------------
class TrainerAgent : public Agent {
 public:
  std::string id() const override { return agent_id::kTrainer; }
  AgentDescriptor descriptor() const override {
    return {id(),
            {MsgKind::Control, MsgKind::DriftAlert, MsgKind::Model},
            {MsgKind::Model},
            AgentStatus::Alive};
  }

  void handle(const AgentMessage& m, AgentContext& ctx) override {
    if (m.kind == MsgKind::Control && m.payload.value("event", "") == "train" && !trained_) {
      const Minute train_end = m.payload.at("train_end_min").get<Minute>();
      for (const auto& c : ctx.scenario->cells) {
        const auto& series = ctx.telemetry->cleaned_series(c.cell_id);
        std::vector<KpiSample> train_slice;
        for (const auto& s : series)
          if (s.t_min <= train_end) train_slice.push_back(s);
        auto stats = make_norm_stats(train_slice);
        auto ts = make_training_set(train_slice, train_end, stats);
        TrainConfig tc;
        tc.seed = ctx.scenario->seed;
        tc.tuner_epochs = ctx.scenario->pipeline.tuner_epochs;
        tc.train_epochs = ctx.scenario->pipeline.train_epochs;
        tc.batch_size = ctx.scenario->pipeline.batch_size;
        tc.checkpoint_every = ctx.scenario->pipeline.checkpoint_every;
        auto artifact = train_model(ts, tc);
        const std::string model_id = artifact.model_id;
        ctx.models->artifacts[model_id] = std::move(artifact);
        ctx.models->training_sets[model_id] = std::move(ts);
        ctx.send(id(), agent_id::kValidator, MsgKind::Model,
                 nlohmann::json{{"event", "candidate"}, {"model_id", model_id},
                                {"cell", c.cell_id}});
      }
      trained_ = true;
    }
    if (m.kind == MsgKind::DriftAlert && m.payload.value("retrain", false)) {
      // Reference runs only acknowledge the request; the retraining loop is
      // disabled unless the scenario enables it.
      ctx.audit->append(ctx.t, id(), "retrain_request",
                        "retraining requested by " + m.sender + " for " +
                            m.payload.value("cell", "?") + " (" +
                            m.payload.value("method", "?") + ")",
                        m.payload);
      if (ctx.scenario->pipeline.retrain_on_request) {
        // Future work: retraining mid-run would go here.
      }
    }
  }

  nlohmann::json checkpoint() const override { return nlohmann::json{{"trained", trained_}}; }
  void restore(const nlohmann::json& j) override { trained_ = j.value("trained", false); }

 private:
  bool trained_ = false;
};

// ---------------------------------------------------------------------------
// Model Validator Agent: persistence-baseline gate, rollout safety filter,
// metric reproducibility; flips the approved bit.
// ---------------------------------------------------------------------------
class ValidatorAgent : public Agent {
 public:
  std::string id() const override { return agent_id::kValidator; }
  AgentDescriptor descriptor() const override {
    return {id(), {MsgKind::Model}, {MsgKind::Model, MsgKind::Control}, AgentStatus::Alive};
  }

  void handle(const AgentMessage& m, AgentContext& ctx) override {
    if (m.kind != MsgKind::Model || m.payload.value("event", "") != "candidate") return;
    const std::string model_id = m.payload.at("model_id").get<std::string>();
    auto& artifact = ctx.models->artifacts.at(model_id);
    const auto& ts = ctx.models->training_sets.at(model_id);
    auto outcome = validate_model(artifact, ts, ctx.scenario->pipeline.baseline_ratio);
    nlohmann::json reasons = nlohmann::json::array();
    for (const auto& r : outcome.reasons) reasons.push_back(r);
    if (outcome.approved) {
      ctx.models->approved_by_cell[artifact.cell_id] = model_id;
      for (const char* peer : {agent_id::kPredictor, agent_id::kDriftDetector}) {
        ctx.send(id(), peer, MsgKind::Model,
                 nlohmann::json{{"event", "approved"}, {"model_id", model_id},
                                {"cell", artifact.cell_id}});
      }
      ctx.audit->append(ctx.t, id(), "model_approved",
                        "approved model " + model_id + " for " + artifact.cell_id,
                        nlohmann::json{{"model_id", model_id}});
      if (ctx.models->approved_by_cell.size() == ctx.scenario->cells.size()) {
        ctx.send(id(), agent_id::kOrchestrator, MsgKind::Control,
                 nlohmann::json{{"event", "models_ready"}});
      }
    } else {
      ctx.send(id(), agent_id::kTrainer, MsgKind::Model,
               nlohmann::json{{"event", "rejected"}, {"model_id", model_id},
                              {"cell", artifact.cell_id}, {"reasons", reasons}});
      ctx.audit->append(ctx.t, id(), "model_rejected",
                        "rejected model " + model_id + " for " + artifact.cell_id,
                        nlohmann::json{{"reasons", reasons}});
    }
  }
};

// ---------------------------------------------------------------------------
// Predictor Agent: loads the latest approved models, produces 10-minute
// autoregressive forecasts with confidence intervals when the orchestrator
// requests an optimization pass.
// ---------------------------------------------------------------------------
class PredictorAgent : public Agent {
 public:
  std::string id() const override { return agent_id::kPredictor; }
  AgentDescriptor descriptor() const override {
    return {id(),
            {MsgKind::Control, MsgKind::Model, MsgKind::Features},
            {MsgKind::Forecast},
            AgentStatus::Alive};
  }

  void handle(const AgentMessage& m, AgentContext& ctx) override {
    if (m.kind == MsgKind::Model && m.payload.value("event", "") == "approved") {
      models_[m.payload.at("cell").get<std::string>()] =
          m.payload.at("model_id").get<std::string>();
      return;
    }
    if (m.kind != MsgKind::Control || m.payload.value("event", "") != "optimize") return;

    const auto& cfg = *ctx.scenario;
    const std::string target = cfg.surge.cell_id;
    const std::string neighbor = cfg.neighbor_cell().cell_id;
    for (const auto& cell : {target, neighbor}) {
      auto it = models_.find(cell);
      if (it == models_.end()) continue;
      const auto& artifact = ctx.models->artifacts.at(it->second);
      const auto& series = ctx.telemetry->cleaned_series(cell);
      if (static_cast<int>(series.size()) < kWindowMinutes) continue;
      auto window = build_window(series, series.back().t_min, artifact.stats);
      auto fc = forecast_rollout(artifact, window);
      nlohmann::json point = nlohmann::json::array(), lo = nlohmann::json::array(),
                     hi = nlohmann::json::array();
      for (int s = 0; s < fc.horizon; ++s) {
        point.push_back(fc.point[s]);
        lo.push_back(fc.lo[s]);
        hi.push_back(fc.hi[s]);
      }
      nlohmann::json payload{{"cell", cell},        {"t_origin", fc.t_origin},
                             {"horizon", fc.horizon}, {"model_id", fc.model_id},
                             {"point", point},      {"lo", lo},
                             {"hi", hi},            {"trigger_id", m.payload.value("trigger_id", "")}};
      const char* dest = cell == target ? agent_id::kPolicyGenerator : agent_id::kVerifier;
      ctx.send(id(), dest, MsgKind::Forecast, payload);
    }
  }

  nlohmann::json checkpoint() const override { return nlohmann::json{{"models", models_}}; }
  void restore(const nlohmann::json& j) override {
    models_.clear();
    if (j.contains("models"))
      for (auto it = j.at("models").begin(); it != j.at("models").end(); ++it)
        models_[it.key()] = it.value().get<std::string>();
  }

  static ForecastSet forecast_from_payload(const nlohmann::json& p) {
    ForecastSet fc;
    fc.cell_id = p.at("cell").get<std::string>();
    fc.t_origin = p.at("t_origin").get<Minute>();
    fc.horizon = p.at("horizon").get<int>();
    fc.model_id = p.at("model_id").get<std::string>();
    for (int s = 0; s < fc.horizon; ++s) {
      std::array<double, kKpiCount> row{}, lo{}, hi{};
      for (int k = 0; k < kKpiCount; ++k) {
        row[k] = p.at("point").at(s).at(k).get<double>();
        lo[k] = p.at("lo").at(s).at(k).get<double>();
        hi[k] = p.at("hi").at(s).at(k).get<double>();
      }
      fc.point.push_back(row);
      fc.lo.push_back(lo);
      fc.hi.push_back(hi);
    }
    return fc;
  }

 private:
  std::map<std::string, std::string> models_;  // cell -> approved model id
};

// ---------------------------------------------------------------------------
// Policy Generator Agent: forecast -> candidate offload with annotated
// impacts. In no-agent mode the candidate goes straight to deployment.
// ---------------------------------------------------------------------------
class PolicyGeneratorAgent : public Agent {
 public:
  std::string id() const override { return agent_id::kPolicyGenerator; }
  AgentDescriptor descriptor() const override {
    return {id(), {MsgKind::Forecast}, {MsgKind::Policy, MsgKind::Control}, AgentStatus::Alive};
  }

  void handle(const AgentMessage& m, AgentContext& ctx) override {
    if (m.kind != MsgKind::Forecast) return;
    const auto& cfg = *ctx.scenario;
    auto fc = PredictorAgent::forecast_from_payload(m.payload);
    auto policy = generate_policy(fc, cfg.guardrails, cfg.target_cell().params.nominal_rrc,
                                  cfg.neighbor_cell().cell_id, ctx.t + 1,
                                  cfg.pipeline.offload_ttl_min);
    if (!policy) {
      ctx.send(id(), agent_id::kOrchestrator, MsgKind::Control,
               nlohmann::json{{"event", "pipeline_resolved"}, {"decisive", false},
                              {"note", "no actionable policy from forecast"}});
      return;
    }
    nlohmann::json payload = policy->to_json();
    payload["forecast"] = m.payload;  // carried for the verifier's comparison
    if (ctx.mode == RunMode::NoAgent) {
      ctx.send(id(), agent_id::kDeployment, MsgKind::Policy, payload);
    } else {
      ctx.send(id(), agent_id::kBaseline, MsgKind::Policy, payload);
      ctx.send(id(), agent_id::kVerifier, MsgKind::Policy, payload);
    }
  }

  static Policy policy_from_payload(const nlohmann::json& p) {
    Policy policy;
    policy.policy_id = p.at("policy_id").get<std::string>();
    policy.directive.policy_id = policy.policy_id;
    policy.directive.source_cell = p.at("source_cell").get<std::string>();
    policy.directive.target_cell = p.at("target_cell").get<std::string>();
    policy.directive.fraction = p.at("fraction").get<double>();
    policy.directive.active_from = p.at("active_from").get<Minute>();
    policy.directive.ttl_min = p.at("ttl_min").get<Minute>();
    policy.predicted_impact = p.value("predicted_impact", nlohmann::json::object());
    policy.origin_forecast = p.value("origin_forecast", "");
    return policy;
  }
};

// ---------------------------------------------------------------------------
// Simulator/Baseline Agent: fits per-cell local models on current telemetry
// (drifted state included) and simulates the candidate policy independently.
// ---------------------------------------------------------------------------
class BaselineAgent : public Agent {
 public:
  std::string id() const override { return agent_id::kBaseline; }
  AgentDescriptor descriptor() const override {
    return {id(), {MsgKind::Policy}, {MsgKind::Baseline}, AgentStatus::Alive};
  }

  void handle(const AgentMessage& m, AgentContext& ctx) override {
    if (m.kind != MsgKind::Policy) return;
    auto policy = PolicyGeneratorAgent::policy_from_payload(m.payload);
    const auto& cfg = *ctx.scenario;
    auto fit = [&](const std::string& cell) {
      return fit_local_model(ctx.telemetry->cleaned_series(cell), cell,
                             cfg.cell(cell).params.prb_per_ue);
    };
    auto src_model = fit(policy.directive.source_cell);
    auto dst_model = fit(policy.directive.target_cell);
    auto sim = simulate_policy(policy, src_model, dst_model,
                               cfg.cell(policy.directive.source_cell).params.nominal_rrc);
    nlohmann::json src = nlohmann::json::array(), dst = nlohmann::json::array(),
                   src_na = nlohmann::json::array();
    for (Minute i = 0; i < policy.directive.ttl_min; ++i) {
      src.push_back({sim.source[i].rrc, sim.source[i].thr, sim.source[i].prb, sim.source[i].sinr});
      dst.push_back({sim.target[i].rrc, sim.target[i].thr, sim.target[i].prb, sim.target[i].sinr});
      src_na.push_back({sim.source_no_action[i].rrc, sim.source_no_action[i].thr,
                        sim.source_no_action[i].prb, sim.source_no_action[i].sinr});
    }
    ctx.send(id(), agent_id::kVerifier, MsgKind::Baseline,
             nlohmann::json{{"policy_id", policy.policy_id},
                            {"source_cell", sim.source_cell},
                            {"target_cell", sim.target_cell},
                            {"source", src},
                            {"target", dst},
                            {"source_no_action", src_na},
                            {"target_resid_sd", sim.target_resid_sd},
                            {"degenerate_fit", dst_model.degenerate}});
  }

  static SimulatedTrajectories trajectories_from_payload(const nlohmann::json& p) {
    SimulatedTrajectories sim;
    sim.source_cell = p.at("source_cell").get<std::string>();
    sim.target_cell = p.at("target_cell").get<std::string>();
    sim.target_resid_sd = p.at("target_resid_sd").get<double>();
    auto parse = [](const nlohmann::json& arr, std::vector<SimPoint>& out) {
      for (const auto& row : arr) {
        SimPoint pt;
        pt.rrc = row.at(0).get<int>();
        pt.thr = row.at(1).get<double>();
        pt.prb = row.at(2).get<double>();
        pt.sinr = row.at(3).get<double>();
        out.push_back(pt);
      }
    };
    parse(p.at("source"), sim.source);
    parse(p.at("target"), sim.target);
    parse(p.at("source_no_action"), sim.source_no_action);
    return sim;
  }
};

// ---------------------------------------------------------------------------
// Verifier Agent: joins the candidate policy, the predictor's neighbor
// forecast and the baseline simulation into a verdict.
// ---------------------------------------------------------------------------
class VerifierAgent : public Agent {
 public:
  std::string id() const override { return agent_id::kVerifier; }
  AgentDescriptor descriptor() const override {
    return {id(),
            {MsgKind::Policy, MsgKind::Forecast, MsgKind::Baseline},
            {MsgKind::Verdict},
            AgentStatus::Alive};
  }

  void handle(const AgentMessage& m, AgentContext& ctx) override {
    if (m.kind == MsgKind::Forecast) {
      neighbor_forecast_ = m.payload;
    } else if (m.kind == MsgKind::Policy) {
      pending_policy_ = m.payload;
    } else if (m.kind == MsgKind::Baseline) {
      pending_baseline_ = m.payload;
    }
    if (!pending_policy_ || !pending_baseline_) return;

    auto policy = PolicyGeneratorAgent::policy_from_payload(*pending_policy_);
    auto sim = BaselineAgent::trajectories_from_payload(*pending_baseline_);
    ForecastSet neighbor_fc;
    if (neighbor_forecast_)
      neighbor_fc = PredictorAgent::forecast_from_payload(*neighbor_forecast_);
    auto verdict = verify_policy(policy, neighbor_fc, sim, ctx.scenario->guardrails);

    nlohmann::ordered_json vj = verdict.to_json();
    nlohmann::json payload = nlohmann::json::parse(vj.dump());
    payload["policy"] = *pending_policy_;
    for (const char* dest :
         {agent_id::kDeployment, agent_id::kDriftDetector, agent_id::kAudit,
          agent_id::kOrchestrator})
      ctx.send(id(), dest, MsgKind::Verdict, payload);
    ctx.decision("verdict", vj);
    pending_policy_.reset();
    pending_baseline_.reset();
    neighbor_forecast_.reset();
  }

  nlohmann::json checkpoint() const override {
    nlohmann::json j;
    if (pending_policy_) j["pending_policy"] = *pending_policy_;
    if (pending_baseline_) j["pending_baseline"] = *pending_baseline_;
    if (neighbor_forecast_) j["neighbor_forecast"] = *neighbor_forecast_;
    return j;
  }
  void restore(const nlohmann::json& j) override {
    if (j.contains("pending_policy")) pending_policy_ = j.at("pending_policy");
    if (j.contains("pending_baseline")) pending_baseline_ = j.at("pending_baseline");
    if (j.contains("neighbor_forecast")) neighbor_forecast_ = j.at("neighbor_forecast");
  }

 private:
  std::optional<nlohmann::json> pending_policy_;
  std::optional<nlohmann::json> pending_baseline_;
  std::optional<nlohmann::json> neighbor_forecast_;
};

// ---------------------------------------------------------------------------
// Deployment Agent: executes approved (or, in no-agent mode, unverified)
// policies on the engine, snapshots state, monitors for rollback.
// ---------------------------------------------------------------------------
class DeploymentAgent : public Agent {
 public:
  std::string id() const override { return agent_id::kDeployment; }
  AgentDescriptor descriptor() const override {
    return {id(),
            {MsgKind::Verdict, MsgKind::Policy},
            {MsgKind::DeployCmd, MsgKind::Audit},
            AgentStatus::Alive};
  }

  void on_tick(AgentContext& ctx) override {
    // Rollback watch while a deployment is live.
    if (!active_policy_.empty() && ctx.directive_active()) {
      const auto& series = ctx.telemetry->cleaned_series(monitored_cell_);
      if (!series.empty() && monitor_.update(series.back().prb_util)) {
        ctx.remove_directive();
        ctx.audit->append(ctx.t, id(), "rollback",
                          "rolled back " + active_policy_ + ": sustained PRB worsening",
                          nlohmann::json{{"policy_id", active_policy_},
                                         {"snapshot_prb", monitor_.snapshot_prb}});
        ctx.decision("rollback", nlohmann::ordered_json{{"policy_id", active_policy_},
                                                        {"t_min", ctx.t}});
        active_policy_.clear();
      }
    }
  }

  void handle(const AgentMessage& m, AgentContext& ctx) override {
    if (m.kind == MsgKind::Verdict) {
      const std::string decision = m.payload.value("decision", "rejected");
      const auto& policy_payload = m.payload.at("policy");
      if (decision == "approved") {
        deploy(PolicyGeneratorAgent::policy_from_payload(policy_payload), "verified", ctx);
      } else {
        DeploymentRecord rec;
        rec.policy_id = policy_payload.value("policy_id", "?");
        rec.action = "refused";
        rec.t_min = ctx.t;
        rec.note = m.payload.value("rationale", "");
        ctx.decision("refusal", rec.to_json());
        ctx.audit->append(ctx.t, id(), "refusal",
                          "refused deployment of " + rec.policy_id + ": verdict " + decision,
                          nlohmann::json{{"policy_id", rec.policy_id}});
      }
    } else if (m.kind == MsgKind::Policy && ctx.mode == RunMode::NoAgent) {
      deploy(PolicyGeneratorAgent::policy_from_payload(m.payload), "unverified", ctx);
    }
  }

  nlohmann::json checkpoint() const override {
    return nlohmann::json{{"active_policy", active_policy_},
                          {"monitored_cell", monitored_cell_},
                          {"snapshot_prb", monitor_.snapshot_prb},
                          {"streak", monitor_.streak},
                          {"deployed", deployed_ids_}};
  }
  void restore(const nlohmann::json& j) override {
    active_policy_ = j.value("active_policy", "");
    monitored_cell_ = j.value("monitored_cell", "");
    monitor_.snapshot_prb = j.value("snapshot_prb", 0.0);
    monitor_.streak = j.value("streak", 0);
    if (j.contains("deployed")) deployed_ids_ = j.at("deployed").get<std::vector<std::string>>();
  }

 private:
  void deploy(const Policy& policy, const std::string& note, AgentContext& ctx) {
    for (const auto& seen : deployed_ids_)
      if (seen == policy.policy_id)
        throw std::logic_error("deploy_policy: duplicate deployment of " + policy.policy_id);
    ctx.install_directive(policy.directive);
    deployed_ids_.push_back(policy.policy_id);
    active_policy_ = policy.policy_id;
    monitored_cell_ = policy.directive.source_cell;
    const auto& series = ctx.telemetry->cleaned_series(monitored_cell_);
    monitor_.snapshot_prb = series.empty() ? 0.0 : series.back().prb_util;
    monitor_.worsen_limit = ctx.scenario->guardrails.rollback_prb_worsen;
    monitor_.streak = 0;
    DeploymentRecord rec;
    rec.policy_id = policy.policy_id;
    rec.action = "deployed";
    rec.t_min = ctx.t;
    rec.snapshot_prb = monitor_.snapshot_prb;
    rec.note = note;
    ctx.decision("deployment", rec.to_json());
    ctx.audit->append(ctx.t, id(), "deployment",
                      "deployed " + policy.policy_id + " (" + note + ") fraction " +
                          std::to_string(policy.directive.fraction),
                      nlohmann::json{{"policy_id", policy.policy_id},
                                     {"fraction", policy.directive.fraction},
                                     {"active_from", policy.directive.active_from}});
    ctx.send(id(), agent_id::kAudit, MsgKind::DeployCmd,
             nlohmann::json{{"policy_id", policy.policy_id}, {"note", note}});
  }

  std::vector<std::string> deployed_ids_;
  std::string active_policy_;
  std::string monitored_cell_;
  RollbackMonitor monitor_;
};

// ---------------------------------------------------------------------------
// Drift Detector Agent: CUSUM on one-step prediction residuals plus KS over
// sliding windows; severe findings request retraining.
// ---------------------------------------------------------------------------
class DriftDetectorAgent : public Agent {
 public:
  std::string id() const override { return agent_id::kDriftDetector; }
  AgentDescriptor descriptor() const override {
    return {id(),
            {MsgKind::Model, MsgKind::Verdict},
            {MsgKind::DriftAlert},
            AgentStatus::Alive};
  }

  void on_tick(AgentContext& ctx) override {
    const auto& cfg = *ctx.scenario;
    // Residual monitoring settles only after the training-period load
    // episodes have flushed out of the feature windows.
    Minute quiet_from = cfg.pipeline.train_end_min + 1;
    if (!cfg.load_jitter.segments.empty()) {
      quiet_from = std::max<Minute>(
          quiet_from,
          static_cast<Minute>(cfg.load_jitter.segments.back().first) + kWindowMinutes + 1);
    }
    for (const auto& c : cfg.cells) {
      const auto& series = ctx.telemetry->cleaned_series(c.cell_id);
      if (series.size() < 2) continue;
      // CUSUM on the one-step PRB prediction residual.
      auto model_it = models_.find(c.cell_id);
      if (ctx.t >= quiet_from && model_it != models_.end() &&
          static_cast<int>(series.size()) > kWindowMinutes + 1) {
        const auto& artifact = ctx.models->artifacts.at(model_it->second);
        std::vector<KpiSample> upto(series.begin(), series.end() - 1);
        auto window = build_window(upto, upto.back().t_min, artifact.stats);
        auto pred = predict_next(artifact, window);
        const int k = static_cast<int>(Kpi::Prb);
        const double sd = std::max(1e-6, artifact.metrics.val_resid_sd[k]);
        const double z = (series.back().prb_util - pred[k]) / sd;
        auto& st = cusum_[c.cell_id];
        st.k = cfg.pipeline.cusum_k;
        st.h = cfg.pipeline.cusum_h;
        if (st.step(z)) {
          DriftReport rep;
          rep.method = "cusum";
          rep.kpi = Kpi::Prb;
          rep.cell_id = c.cell_id;
          rep.statistic = z;
          rep.threshold = st.h;
          rep.severity = DriftSeverity::Severe;
          raise(rep, ctx);
        }
      }
      // KS over two adjacent 30-minute windows, once both clear the
      // training-period load episodes.
      if (series.size() >= 60 && series[series.size() - 60].t_min >= quiet_from - kWindowMinutes) {
        std::vector<double> a, b;
        for (std::size_t i = series.size() - 60; i < series.size() - 30; ++i)
          a.push_back(series[i].prb_util);
        for (std::size_t i = series.size() - 30; i < series.size(); ++i)
          b.push_back(series[i].prb_util);
        auto rep = ks_two_sample(a, b, cfg.pipeline.ks_alpha);
        rep.cell_id = c.cell_id;
        rep.kpi = Kpi::Prb;
        rep.window_a_start = series[series.size() - 60].t_min;
        rep.window_a_end = series[series.size() - 31].t_min;
        rep.window_b_start = series[series.size() - 30].t_min;
        rep.window_b_end = series.back().t_min;
        if (rep.severity != DriftSeverity::None) raise(rep, ctx);
      }
    }
  }

  void handle(const AgentMessage& m, AgentContext& ctx) override {
    if (m.kind == MsgKind::Model && m.payload.value("event", "") == "approved") {
      models_[m.payload.at("cell").get<std::string>()] =
          m.payload.at("model_id").get<std::string>();
    }
    if (m.kind == MsgKind::Verdict && m.payload.value("retrain_requested", false)) {
      // Verifier flagged predictor/baseline divergence: treat as drift input.
      if (!verdict_retrain_sent_) {
        verdict_retrain_sent_ = true;
        ctx.send(id(), agent_id::kTrainer, MsgKind::DriftAlert,
                 nlohmann::json{{"retrain", true},
                                {"method", "verifier_divergence"},
                                {"cell", ctx.scenario->neighbor_cell().cell_id},
                                {"policy_id", m.payload.value("policy_id", "")}});
      }
    }
  }

  nlohmann::json checkpoint() const override {
    nlohmann::json cusums;
    for (const auto& [cell, st] : cusum_)
      cusums[cell] = nlohmann::json{{"s_pos", st.s_pos}, {"alarms", st.alarms}};
    nlohmann::json fired = nlohmann::json::array();
    for (const auto& f : fired_) fired.push_back(f);
    return nlohmann::json{{"models", models_},
                          {"cusum", cusums},
                          {"fired", fired},
                          {"verdict_retrain_sent", verdict_retrain_sent_}};
  }
  void restore(const nlohmann::json& j) override {
    models_.clear();
    if (j.contains("models"))
      for (auto it = j.at("models").begin(); it != j.at("models").end(); ++it)
        models_[it.key()] = it.value().get<std::string>();
    if (j.contains("cusum"))
      for (auto it = j.at("cusum").begin(); it != j.at("cusum").end(); ++it) {
        cusum_[it.key()].s_pos = it.value().value("s_pos", 0.0);
        cusum_[it.key()].alarms = it.value().value("alarms", 0);
      }
    fired_.clear();
    if (j.contains("fired"))
      for (const auto& f : j.at("fired")) fired_.insert(f.get<std::string>());
    verdict_retrain_sent_ = j.value("verdict_retrain_sent", false);
  }

 private:
  void raise(const DriftReport& rep, AgentContext& ctx) {
    auto decision = assess_drift({rep});
    const std::string key = rep.method + ":" + rep.cell_id;
    nlohmann::ordered_json body{{"method", rep.method},
                                {"cell", rep.cell_id},
                                {"kpi", kpi_name(rep.kpi)},
                                {"statistic", rep.statistic},
                                {"threshold", rep.threshold},
                                {"severity", severity_name(rep.severity)},
                                {"t_min", ctx.t}};
    if (decision.retrain && !fired_.count(key)) {
      fired_.insert(key);
      ctx.send(id(), agent_id::kTrainer, MsgKind::DriftAlert,
               nlohmann::json{{"retrain", true},
                              {"method", rep.method},
                              {"cell", rep.cell_id},
                              {"kpi", kpi_name(rep.kpi)},
                              {"statistic", rep.statistic},
                              {"threshold", rep.threshold}});
      ctx.send(id(), agent_id::kAudit, MsgKind::DriftAlert, nlohmann::json::parse(body.dump()));
      ctx.decision("drift_alert", body);
    } else if (decision.monitor_only && !fired_.count(key + ":mild")) {
      fired_.insert(key + ":mild");
      ctx.audit->append(ctx.t, id(), "drift_monitor",
                        "mild drift on " + rep.cell_id + " (" + rep.method + "), monitoring",
                        nlohmann::json::parse(body.dump()));
    }
  }

  std::map<std::string, std::string> models_;
  std::map<std::string, CusumState> cusum_;
  std::set<std::string> fired_;
  bool verdict_retrain_sent_ = false;
};

// ---------------------------------------------------------------------------
// Audit & Explainability Agent: hash-chained audit entries for every decision
// the pipeline takes. The compliance rule list is intentionally empty.
// ---------------------------------------------------------------------------
class AuditAgent : public Agent {
 public:
  std::string id() const override { return agent_id::kAudit; }
  AgentDescriptor descriptor() const override {
    return {id(),
            {MsgKind::Verdict, MsgKind::DriftAlert, MsgKind::DeployCmd, MsgKind::Audit},
            {},
            AgentStatus::Alive};
  }

  void handle(const AgentMessage& m, AgentContext& ctx) override {
    // Compliance checker: a no-op rule list; every entry passes through.
    switch (m.kind) {
      case MsgKind::Verdict:
        ctx.audit->append(ctx.t, id(), "verdict",
                          m.payload.value("rationale", "verdict received"),
                          nlohmann::json{{"policy_id", m.payload.value("policy_id", "")},
                                         {"decision", m.payload.value("decision", "")}});
        break;
      case MsgKind::DriftAlert:
        ctx.audit->append(ctx.t, id(), "drift_alert",
                          "drift alert from " + m.sender + " on " +
                              m.payload.value("cell", std::string("?")),
                          m.payload);
        break;
      case MsgKind::DeployCmd:
        ctx.audit->append(ctx.t, id(), "deploy_cmd",
                          "deployment executed: " + m.payload.value("policy_id", std::string()),
                          m.payload);
        break;
      case MsgKind::Audit:
        ctx.audit->append(ctx.t, id(), m.payload.value("event", "note"),
                          m.payload.value("summary", ""), m.payload);
        break;
      default:
        break;
    }
  }
};

// ---------------------------------------------------------------------------
// Security Agent: authenticates registrations (via the registry), surfaces
// the bus's integrity alerts as audit material.
// ---------------------------------------------------------------------------
class SecurityAgent : public Agent {
 public:
  std::string id() const override { return agent_id::kSecurity; }
  AgentDescriptor descriptor() const override {
    return {id(), {MsgKind::Control}, {MsgKind::Audit}, AgentStatus::Alive};
  }

  void on_tick(AgentContext& ctx) override {
    for (const auto& alert : ctx.bus->take_new_alerts()) {
      ctx.send(id(), agent_id::kAudit, MsgKind::Audit,
               nlohmann::json{{"event", "integrity_alert"},
                              {"summary", "message " + alert.msg_id + " rejected: " + alert.reason},
                              {"msg_id", alert.msg_id},
                              {"sender", alert.sender},
                              {"recipient", alert.recipient},
                              {"reason", alert.reason}});
      ctx.decision("integrity_alert",
                   nlohmann::ordered_json{{"t_min", ctx.t},
                                          {"msg_id", alert.msg_id},
                                          {"reason", alert.reason}});
    }
  }
};

}  // namespace ranassure
