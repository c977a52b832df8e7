// Agent registry and the in-process lockstep message bus: sealing and
// verification on every route, per-(sender, recipient) FIFO delivery, a
// deterministic transcript, and an optional newline-delimited-JSON wire mode
// that pushes every frame through a byte stream before delivery.
#pragma once

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ranassure/digest.hpp"
#include "ranassure/message.hpp"

namespace ranassure {

enum class AgentStatus { Alive, Failed, Restarted };

struct AgentDescriptor {
  std::string agent_id;
  std::vector<MsgKind> kinds_consumed;
  std::vector<MsgKind> kinds_produced;
  AgentStatus status = AgentStatus::Alive;
};

inline nlohmann::ordered_json descriptor_to_json(const AgentDescriptor& d) {
  nlohmann::ordered_json consumed = nlohmann::ordered_json::array();
  for (auto k : d.kinds_consumed) consumed.push_back(msg_kind_name(k));
  nlohmann::ordered_json produced = nlohmann::ordered_json::array();
  for (auto k : d.kinds_produced) produced.push_back(msg_kind_name(k));
  const char* status = d.status == AgentStatus::Alive
                           ? "alive"
                           : d.status == AgentStatus::Failed ? "failed" : "restarted";
  return nlohmann::ordered_json{{"agent_id", d.agent_id},
                                {"kinds_consumed", consumed},
                                {"kinds_produced", produced},
                                {"status", status}};
}

struct RoutingAlert {
  std::string agent_id;
  MsgKind kind;
  bool missing_producer = false;  // otherwise: missing consumer
};

class AgentRegistry {
 public:
  explicit AgentRegistry(std::string run_key) : run_key_(std::move(run_key)) {}

  // Registration hands the run key to the agent for sealing its messages.
  const std::string& register_agent(const AgentDescriptor& desc) {
    if (agents_.count(desc.agent_id))
      throw std::invalid_argument("register_agent: duplicate id " + desc.agent_id);
    agents_[desc.agent_id] = desc;
    return run_key_;
  }

  bool known(const std::string& id) const { return agents_.count(id) > 0; }
  std::size_t size() const { return agents_.size(); }
  const std::string& run_key() const { return run_key_; }

  AgentDescriptor& descriptor(const std::string& id) {
    auto it = agents_.find(id);
    if (it == agents_.end()) throw std::out_of_range("unknown agent: " + id);
    return it->second;
  }

  // Wiring check over the registered graph: every consumed kind needs a
  // producer and every produced kind a consumer.
  std::vector<RoutingAlert> routing_alerts() const {
    std::set<MsgKind> produced, consumed;
    for (const auto& [id, d] : agents_) {
      produced.insert(d.kinds_produced.begin(), d.kinds_produced.end());
      consumed.insert(d.kinds_consumed.begin(), d.kinds_consumed.end());
    }
    std::vector<RoutingAlert> alerts;
    for (const auto& [id, d] : agents_) {
      for (MsgKind k : d.kinds_consumed)
        if (!produced.count(k)) alerts.push_back({id, k, true});
      for (MsgKind k : d.kinds_produced)
        if (!consumed.count(k)) alerts.push_back({id, k, false});
    }
    return alerts;
  }

 private:
  std::string run_key_;
  std::map<std::string, AgentDescriptor> agents_;
};

struct TranscriptEntry {
  int tick = 0;
  int phase = 0;
  std::string msg_id;
  std::string sender;
  std::string recipient;
  MsgKind kind = MsgKind::Control;
  std::string body_digest;
};

struct IntegrityAlert {
  int tick = 0;
  std::string msg_id;
  std::string sender;
  std::string recipient;
  std::string reason;
};

// Reliable in-memory byte stream carrying newline-delimited JSON frames; the
// read side tolerates frames arriving in arbitrary chunks.
class WireChannel {
 public:
  void write(const std::string& bytes) { buffer_ += bytes; }

  std::vector<std::string> read_frames() {
    std::vector<std::string> frames;
    std::size_t start = 0;
    for (std::size_t i = 0; i < buffer_.size(); ++i) {
      if (buffer_[i] == '\n') {
        frames.push_back(buffer_.substr(start, i - start));
        start = i + 1;
      }
    }
    buffer_.erase(0, start);
    return frames;
  }

  bool empty() const { return buffer_.empty(); }

 private:
  std::string buffer_;
};

class MessageBus {
 public:
  MessageBus(AgentRegistry& registry, bool wire_mode = false)
      : registry_(registry), wire_mode_(wire_mode) {}

  // Test hook: invoked on the serialized form of every message in flight;
  // returning a different string simulates in-transit corruption.
  std::function<std::string(const std::string&)> transit_interceptor;

  void set_clock(int tick, int phase) {
    tick_ = tick;
    phase_ = phase;
  }

  // Seals and routes m. Unauthorized senders are dropped with an alert.
  // Delivery order per (sender, recipient) pair equals send order.
  void send(AgentMessage m) {
    m.msg_id = make_msg_id(m);
    if (!registry_.known(m.sender)) {
      alerts_.push_back({tick_, m.msg_id, m.sender, m.recipient, "unauthorized sender"});
      return;
    }
    AgentMessage sealed = seal_message(std::move(m), registry_.run_key());
    std::string in_flight = sealed.to_json().dump();
    if (transit_interceptor) in_flight = transit_interceptor(in_flight);
    if (wire_mode_) {
      wire_.write(in_flight);
      wire_.write("\n");
      for (const auto& frame : wire_.read_frames()) deliver(frame);
    } else {
      deliver(in_flight);
    }
  }

  // Drains pending messages for one recipient, preserving per-pair FIFO.
  std::vector<AgentMessage> drain(const std::string& recipient) {
    auto it = mailboxes_.find(recipient);
    if (it == mailboxes_.end()) return {};
    std::vector<AgentMessage> out(it->second.begin(), it->second.end());
    it->second.clear();
    return out;
  }

  bool has_mail(const std::string& recipient) const {
    auto it = mailboxes_.find(recipient);
    return it != mailboxes_.end() && !it->second.empty();
  }

  const std::vector<TranscriptEntry>& transcript() const { return transcript_; }
  const std::vector<IntegrityAlert>& integrity_alerts() const { return alerts_; }
  std::vector<IntegrityAlert> take_new_alerts() {
    std::vector<IntegrityAlert> out(alerts_.begin() + consumed_alerts_, alerts_.end());
    consumed_alerts_ = alerts_.size();
    return out;
  }

  std::string transcript_digest() const {
    Sha256 h;
    for (const auto& e : transcript_) {
      std::ostringstream os;
      os << e.tick << '|' << e.phase << '|' << e.sender << '|' << e.recipient << '|'
         << msg_kind_name(e.kind) << '|' << e.body_digest << '\n';
      const std::string line = os.str();
      h.update(line.data(), line.size());
    }
    return to_hex(h.finish());
  }

 private:
  std::string make_msg_id(const AgentMessage& m) {
    std::ostringstream os;
    os << 'm' << seq_++ << '-' << m.sender << '-' << msg_kind_name(m.kind);
    return os.str();
  }

  void deliver(const std::string& serialized) {
    AgentMessage m;
    try {
      m = AgentMessage::from_json(nlohmann::json::parse(serialized));
    } catch (const std::exception& e) {
      alerts_.push_back({tick_, "?", "?", "?", std::string("unparseable frame: ") + e.what()});
      return;
    }
    if (!registry_.known(m.sender)) {
      alerts_.push_back({tick_, m.msg_id, m.sender, m.recipient, "unauthorized sender"});
      return;
    }
    if (verify_message(m, registry_.run_key()) != VerifyStatus::Accept) {
      alerts_.push_back({tick_, m.msg_id, m.sender, m.recipient, "integrity tag mismatch"});
      return;
    }
    transcript_.push_back({tick_, phase_, m.msg_id, m.sender, m.recipient, m.kind,
                           sha256_hex(m.canonical_body()).substr(0, 16)});
    mailboxes_[m.recipient].push_back(std::move(m));
  }

  AgentRegistry& registry_;
  bool wire_mode_;
  WireChannel wire_;
  int tick_ = 0;
  int phase_ = 0;
  std::uint64_t seq_ = 0;
  std::map<std::string, std::deque<AgentMessage>> mailboxes_;
  std::vector<TranscriptEntry> transcript_;
  std::vector<IntegrityAlert> alerts_;
  std::size_t consumed_alerts_ = 0;
};

}  // namespace ranassure
