// Hash-chained append-only audit log. Each entry links to its predecessor via
// entry_hash = sha256(prev_hash || canonical entry body); any mutation breaks
// every later link.
#pragma once

#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ranassure/digest.hpp"
#include "ranassure/kpi.hpp"

namespace ranassure {

inline constexpr const char* kAuditGenesis =
    "0000000000000000000000000000000000000000000000000000000000000000";

struct AuditEntry {
  std::uint64_t seq = 0;
  Minute t_min = 0;
  std::string actor;
  std::string event;    // short machine tag, e.g. "verdict", "recovery"
  std::string summary;  // human-readable sentence
  nlohmann::json detail;
  std::string prev_hash;
  std::string entry_hash;

  std::string canonical_body() const {
    nlohmann::json j;
    j["actor"] = actor;
    j["detail"] = detail;
    j["event"] = event;
    j["seq"] = seq;
    j["summary"] = summary;
    j["t_min"] = t_min;
    return j.dump();
  }

  nlohmann::ordered_json to_json() const {
    return nlohmann::ordered_json{{"seq", seq},         {"t_min", t_min},
                                  {"actor", actor},     {"event", event},
                                  {"summary", summary}, {"detail", detail},
                                  {"prev_hash", prev_hash}, {"entry_hash", entry_hash}};
  }

  static AuditEntry from_json(const nlohmann::json& j) {
    AuditEntry e;
    e.seq = j.at("seq").get<std::uint64_t>();
    e.t_min = j.at("t_min").get<Minute>();
    e.actor = j.at("actor").get<std::string>();
    e.event = j.at("event").get<std::string>();
    e.summary = j.at("summary").get<std::string>();
    e.detail = j.at("detail");
    e.prev_hash = j.at("prev_hash").get<std::string>();
    e.entry_hash = j.at("entry_hash").get<std::string>();
    return e;
  }
};

class AuditChain {
 public:
  const std::vector<AuditEntry>& entries() const { return entries_; }
  std::string head_hash() const { return entries_.empty() ? kAuditGenesis : entries_.back().entry_hash; }
  std::uint64_t next_seq() const { return entries_.size(); }

  AuditEntry& append(Minute t, const std::string& actor, const std::string& event,
                     const std::string& summary, nlohmann::json detail = {}) {
    AuditEntry e;
    e.seq = next_seq();
    e.t_min = t;
    e.actor = actor;
    e.event = event;
    e.summary = summary;
    e.detail = std::move(detail);
    e.prev_hash = head_hash();
    e.entry_hash = sha256_hex(e.prev_hash + e.canonical_body());
    entries_.push_back(std::move(e));
    return entries_.back();
  }

  // For restart recovery: resume an existing chain state.
  void restore(std::vector<AuditEntry> entries) { entries_ = std::move(entries); }

 private:
  std::vector<AuditEntry> entries_;
};

// Recomputes every link. Returns the index of the first bad entry, or
// nullopt when the whole chain is valid. Empty logs are valid.
inline std::optional<std::size_t> verify_chain(const std::vector<AuditEntry>& log) {
  std::string prev = kAuditGenesis;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto& e = log[i];
    if (e.seq != i) return i;
    if (e.prev_hash != prev) return i;
    if (e.entry_hash != sha256_hex(e.prev_hash + e.canonical_body())) return i;
    prev = e.entry_hash;
  }
  return std::nullopt;
}

inline void write_audit_jsonl(const std::vector<AuditEntry>& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write audit log: " + path);
  for (const auto& e : log) out << e.to_json().dump() << '\n';
}

inline std::vector<AuditEntry> read_audit_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read audit log: " + path);
  std::vector<AuditEntry> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(AuditEntry::from_json(nlohmann::json::parse(line)));
  }
  return out;
}

}  // namespace ranassure
