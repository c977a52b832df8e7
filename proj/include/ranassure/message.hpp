// Typed, integrity-tagged message envelopes exchanged between agents.
// Payloads are canonical JSON (sorted keys, shortest round-trip numbers);
// tags are HMAC-SHA256 over the canonical serialization under the run key.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "ranassure/digest.hpp"
#include "ranassure/kpi.hpp"

namespace ranassure {

enum class MsgKind {
  Telemetry,
  Features,
  Model,
  Forecast,
  Policy,
  Baseline,
  Verdict,
  DriftAlert,
  DeployCmd,
  Audit,
  Control,
};

inline const char* msg_kind_name(MsgKind k) {
  switch (k) {
    case MsgKind::Telemetry: return "telemetry";
    case MsgKind::Features: return "features";
    case MsgKind::Model: return "model";
    case MsgKind::Forecast: return "forecast";
    case MsgKind::Policy: return "policy";
    case MsgKind::Baseline: return "baseline";
    case MsgKind::Verdict: return "verdict";
    case MsgKind::DriftAlert: return "drift_alert";
    case MsgKind::DeployCmd: return "deploy_cmd";
    case MsgKind::Audit: return "audit";
    case MsgKind::Control: return "control";
  }
  return "?";
}

inline MsgKind msg_kind_from_name(const std::string& s) {
  static const std::map<std::string, MsgKind> table = {
      {"telemetry", MsgKind::Telemetry}, {"features", MsgKind::Features},
      {"model", MsgKind::Model},         {"forecast", MsgKind::Forecast},
      {"policy", MsgKind::Policy},       {"baseline", MsgKind::Baseline},
      {"verdict", MsgKind::Verdict},     {"drift_alert", MsgKind::DriftAlert},
      {"deploy_cmd", MsgKind::DeployCmd},{"audit", MsgKind::Audit},
      {"control", MsgKind::Control},
  };
  auto it = table.find(s);
  if (it == table.end()) throw std::invalid_argument("unknown message kind: " + s);
  return it->second;
}

struct AgentMessage {
  std::string msg_id;
  Minute t_min = 0;
  std::string sender;
  std::string recipient;
  MsgKind kind = MsgKind::Control;
  nlohmann::json payload;  // std::map-backed: keys serialize sorted
  std::string integrity_tag;

  // Canonical bytes cover everything except the tag itself.
  std::string canonical_body() const {
    nlohmann::json j;  // sorted keys by construction
    j["kind"] = msg_kind_name(kind);
    j["msg_id"] = msg_id;
    j["payload"] = payload;
    j["recipient"] = recipient;
    j["sender"] = sender;
    j["t_min"] = t_min;
    return j.dump();
  }

  nlohmann::ordered_json to_json() const {
    return nlohmann::ordered_json{{"msg_id", msg_id},       {"t_min", t_min},
                                  {"sender", sender},       {"recipient", recipient},
                                  {"kind", msg_kind_name(kind)}, {"payload", payload},
                                  {"integrity_tag", integrity_tag}};
  }

  static AgentMessage from_json(const nlohmann::json& j) {
    AgentMessage m;
    m.msg_id = j.at("msg_id").get<std::string>();
    m.t_min = j.at("t_min").get<Minute>();
    m.sender = j.at("sender").get<std::string>();
    m.recipient = j.at("recipient").get<std::string>();
    m.kind = msg_kind_from_name(j.at("kind").get<std::string>());
    m.payload = j.at("payload");
    m.integrity_tag = j.value("integrity_tag", "");
    return m;
  }
};

// Computes the integrity tag under the run key. Deterministic for identical
// content; throws if the payload cannot serialize.
inline AgentMessage seal_message(AgentMessage m, const std::string& key) {
  std::string body;
  try {
    body = m.canonical_body();
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("seal_message: payload not serializable: ") +
                                e.what());
  }
  m.integrity_tag = hmac_sha256_hex(key, body);
  return m;
}

enum class VerifyStatus { Accept, RejectTampered, RejectUnauthorized };

inline const char* verify_status_name(VerifyStatus s) {
  switch (s) {
    case VerifyStatus::Accept: return "accept";
    case VerifyStatus::RejectTampered: return "reject_tampered";
    case VerifyStatus::RejectUnauthorized: return "reject_unauthorized";
  }
  return "?";
}

// Recomputes the tag; mismatch means the message was altered in flight.
inline VerifyStatus verify_message(const AgentMessage& m, const std::string& key) {
  if (m.integrity_tag != hmac_sha256_hex(key, m.canonical_body()))
    return VerifyStatus::RejectTampered;
  return VerifyStatus::Accept;
}

}  // namespace ranassure
