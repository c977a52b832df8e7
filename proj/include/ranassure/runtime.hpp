// Pipeline runtime: hosts the thirteen agents, drives the fixed per-tick
// phase order over the lockstep bus, recovers failed agents from their last
// checkpoint, and bridges the Deployment Agent onto the network engine.
#pragma once

#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "ranassure/agents.hpp"

namespace ranassure {

struct TickReport {
  Minute t = 0;
  std::vector<std::string> phases_run;
  std::size_t messages_routed = 0;
  bool verdict_seen = false;
  std::vector<RecoveryEvent> recoveries;
};

struct PipelineResult {
  RunOutcome outcome;
  std::string transcript_digest;
  std::vector<TranscriptEntry> transcript;
  std::vector<AuditEntry> audit;
  std::vector<DecisionLine> decisions;
  std::vector<TickReport> reports;
  std::vector<RecoveryEvent> recoveries;
};

class PipelineRuntime {
 public:
  PipelineRuntime(const ScenarioConfig& scenario, RunMode mode, bool wire_mode = false)
      : scenario_(scenario),
        mode_(mode),
        registry_("run-key-" + std::to_string(scenario.seed)),
        bus_(registry_, wire_mode) {
    add_host(agent_id::kOrchestrator, [] { return std::make_unique<OrchestratorAgent>(); });
    add_host(agent_id::kDataCollector, [] { return std::make_unique<DataCollectorAgent>(); });
    add_host(agent_id::kPreprocessor, [] { return std::make_unique<PreprocessorAgent>(); });
    add_host(agent_id::kTrainer, [] { return std::make_unique<TrainerAgent>(); });
    add_host(agent_id::kValidator, [] { return std::make_unique<ValidatorAgent>(); });
    add_host(agent_id::kPredictor, [] { return std::make_unique<PredictorAgent>(); });
    add_host(agent_id::kPolicyGenerator, [] { return std::make_unique<PolicyGeneratorAgent>(); });
    add_host(agent_id::kBaseline, [] { return std::make_unique<BaselineAgent>(); });
    add_host(agent_id::kVerifier, [] { return std::make_unique<VerifierAgent>(); });
    add_host(agent_id::kDeployment, [] { return std::make_unique<DeploymentAgent>(); });
    add_host(agent_id::kDriftDetector, [] { return std::make_unique<DriftDetectorAgent>(); });
    add_host(agent_id::kSecurity, [] { return std::make_unique<SecurityAgent>(); });
    add_host(agent_id::kAudit, [] { return std::make_unique<AuditAgent>(); });
    for (const auto& alert : registry_.routing_alerts()) {
      audit_.append(0, agent_id::kOrchestrator, "routing_alert",
                    std::string("kind ") + msg_kind_name(alert.kind) +
                        (alert.missing_producer ? " has no producer" : " has no consumer") +
                        " (agent " + alert.agent_id + ")");
    }
    // Registration handshake: every agent announces its descriptor to the
    // security agent. In wire mode these are the first frames on the stream.
    bus_.set_clock(0, 0);
    for (const char* aid : kPhaseOrder) {
      AgentMessage m;
      m.t_min = 0;
      m.sender = aid;
      m.recipient = agent_id::kSecurity;
      m.kind = MsgKind::Control;
      m.payload = nlohmann::json::parse(
          nlohmann::ordered_json{
              {"event", "register"},
              {"descriptor", descriptor_to_json(hosts_.at(aid).agent->descriptor())}}
              .dump());
      bus_.send(std::move(m));
    }
    bus_.drain(agent_id::kSecurity);  // handshake frames are lifecycle-only
  }

  // Forces `times` consecutive failures of an agent's phase at the given tick.
  void inject_failure(const std::string& agent, Minute tick, int times = 1) {
    hosts_.at(agent).injected[tick] = times;
  }

  const AgentRegistry& registry() const { return registry_; }
  MessageBus& bus() { return bus_; }
  const AuditChain& audit() const { return audit_; }
  const std::vector<DecisionLine>& decisions() const { return decisions_; }
  const std::vector<TickReport>& reports() const { return reports_; }
  const std::vector<RecoveryEvent>& recoveries() const { return recoveries_; }

  // The netsim per-tick hook.
  TickController controller() {
    return [this](Minute t, const std::vector<KpiSample>& samples, Simulation& sim) {
      dispatch_tick(t, samples, sim);
    };
  }

  TickReport dispatch_tick(Minute t, const std::vector<KpiSample>& samples, Simulation& sim) {
    AgentContext ctx;
    ctx.t = t;
    ctx.mode = mode_;
    ctx.scenario = &scenario_;
    ctx.bus = &bus_;
    ctx.telemetry = &telemetry_;
    ctx.models = &models_;
    ctx.audit = &audit_;
    ctx.decisions = &decisions_;
    ctx.fresh = &samples;
    ctx.install_directive = [&sim](const OffloadDirective& d) { sim.install_directive(d); };
    ctx.remove_directive = [&sim]() { sim.remove_directive(); };
    ctx.directive_active = [&sim, t]() { return sim.directive_active(t); };

    TickReport report;
    report.t = t;
    const std::size_t transcript_before = bus_.transcript().size();
    const std::size_t recoveries_before = recoveries_.size();

    int phase = 0;
    for (const char* aid : kPhaseOrder) {
      bus_.set_clock(t, phase);
      run_phase(aid, ctx, samples);
      ++phase;
    }
    for (auto& [id, host] : hosts_) {
      if (!host.degraded) host.checkpoint = host.agent->checkpoint();
    }

    report.messages_routed = bus_.transcript().size() - transcript_before;
    for (std::size_t i = transcript_before; i < bus_.transcript().size(); ++i) {
      if (bus_.transcript()[i].kind == MsgKind::Verdict) report.verdict_seen = true;
    }
    for (const char* aid : kPhaseOrder)
      if (!hosts_.at(aid).degraded) report.phases_run.push_back(aid);
    report.recoveries.assign(recoveries_.begin() + recoveries_before, recoveries_.end());
    reports_.push_back(report);
    return report;
  }

 private:
  struct Host {
    std::function<std::unique_ptr<Agent>()> factory;
    std::unique_ptr<Agent> agent;
    nlohmann::json checkpoint;
    std::map<Minute, int> injected;  // tick -> remaining forced failures
    bool degraded = false;
  };

  static constexpr const char* kPhaseOrder[13] = {
      agent_id::kOrchestrator, agent_id::kDataCollector, agent_id::kPreprocessor,
      agent_id::kTrainer,      agent_id::kValidator,     agent_id::kPredictor,
      agent_id::kPolicyGenerator, agent_id::kBaseline,   agent_id::kVerifier,
      agent_id::kDeployment,   agent_id::kDriftDetector, agent_id::kSecurity,
      agent_id::kAudit};

  void add_host(const std::string& id, std::function<std::unique_ptr<Agent>()> factory) {
    Host h;
    h.factory = std::move(factory);
    h.agent = h.factory();
    h.checkpoint = h.agent->checkpoint();
    registry_.register_agent(h.agent->descriptor());
    hosts_.emplace(id, std::move(h));
  }

  // Runs one agent's phase: mail first, then the per-tick hook. A failure
  // restarts the agent from its last checkpoint and replays the same inputs;
  // a third consecutive failure degrades the agent and skips the phase.
  void run_phase(const std::string& aid, AgentContext& ctx, const std::vector<KpiSample>& fresh) {
    Host& host = hosts_.at(aid);
    if (host.degraded) return;
    auto batch = bus_.drain(aid);
    int attempts = 0;
    while (true) {
      try {
        auto inj = host.injected.find(ctx.t);
        if (inj != host.injected.end() && inj->second > 0) {
          --inj->second;
          throw std::runtime_error("injected failure");
        }
        for (const auto& m : batch) host.agent->handle(m, ctx);
        host.agent->on_tick(ctx);
        if (aid == agent_id::kDataCollector)
          static_cast<DataCollectorAgent*>(host.agent.get())->collect(fresh, ctx);
        return;
      } catch (const std::exception& e) {
        ++attempts;
        if (attempts >= 3) {
          host.degraded = true;
          recoveries_.push_back({ctx.t, aid, false});
          audit_.append(ctx.t, agent_id::kOrchestrator, "degraded",
                        "agent " + aid + " failed repeatedly, continuing without it (gap marker)",
                        nlohmann::json{{"agent", aid}, {"error", e.what()}});
          return;
        }
        host.agent = host.factory();
        host.agent->restore(host.checkpoint);
        recoveries_.push_back({ctx.t, aid, true});
        audit_.append(ctx.t, agent_id::kOrchestrator, "recovery",
                      "agent " + aid + " restarted from checkpoint, inputs replayed",
                      nlohmann::json{{"agent", aid}, {"error", e.what()}});
      }
    }
  }

  ScenarioConfig scenario_;
  RunMode mode_;
  AgentRegistry registry_;
  MessageBus bus_;
  std::map<std::string, Host> hosts_;
  TelemetryStore telemetry_;
  ModelStore models_;
  AuditChain audit_;
  std::vector<DecisionLine> decisions_;
  std::vector<TickReport> reports_;
  std::vector<RecoveryEvent> recoveries_;
};

// Convenience driver: runs the scenario with the pipeline attached (or bare
// for baseline mode) and collects every artifact the harness needs.
struct FailureInjection {
  std::string agent;
  Minute tick = 0;
  int times = 1;
};

inline PipelineResult run_pipeline(const ScenarioConfig& scenario, RunMode mode,
                                   bool wire_mode = false,
                                   const std::vector<FailureInjection>& failures = {}) {
  PipelineResult result;
  if (mode == RunMode::Baseline) {
    result.outcome = run_scenario(scenario);
    return result;
  }
  PipelineRuntime runtime(scenario, mode, wire_mode);
  for (const auto& f : failures) runtime.inject_failure(f.agent, f.tick, f.times);
  result.outcome = run_scenario(scenario, runtime.controller());
  result.transcript_digest = runtime.bus().transcript_digest();
  result.transcript = runtime.bus().transcript();
  result.audit = runtime.audit().entries();
  result.decisions = runtime.decisions();
  result.reports = runtime.reports();
  result.recoveries = runtime.recoveries();
  return result;
}

}  // namespace ranassure
