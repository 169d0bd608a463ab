#pragma once

#include <optional>
#include <string>
#include <vector>

#include "apiot/mission.hpp"

#include "json.hpp"

namespace apiot {

// One JSONL row per agent turn. Field set is frozen; downstream analysis
// depends on these exact keys.
struct TurnLogRow {
  std::string run_id;
  int turn = 0;
  std::string phase;
  std::string tool;  // empty for signal/empty turns
  std::string target_ip;
  std::string args_digest;
  std::string verdict;        // allowed | blocked:<reason> | n/a
  std::string result_status;  // ok | no_response | blocked | error | unsupported | n/a
  double sim_time_ms = 0;
  int tokens_est = 0;

  nlohmann::json to_json() const;
  static TurnLogRow from_json(const nlohmann::json& j);
};

struct InjectionRecord {
  int turn = 0;
  std::string kind;
  std::string message;
};

// Ground-truth annotation per executed-or-blocked tool call; never visible to
// the agent.
struct CallAnnotation {
  int turn = 0;
  std::string tool;
  std::string target_ip;
  std::string digest;
  bool blocked = false;
  bool offensive = false;
  bool crash_capable = false;
  bool exploit_succeeded = false;
  std::optional<std::string> protocol_used;
  std::optional<bool> protocol_match;  // set when the target has a native protocol
};

struct FindingRecord {
  int finding_id = 0;
  std::string target_ip;
  std::string vuln;
  bool confirmed = false;
  int exploit_turn = -1;
  int confirmed_turn = -1;
  double exploit_time_ms = 0;
};

struct PatchRecord {
  int patch_id = 0;
  int finding_id = -1;
  bool verified = false;
  bool orphan = false;
  int verified_turn = -1;
  double verified_time_ms = 0;
};

struct RunRecord {
  std::string run_id;
  nlohmann::json config;  // serialized run configuration, opaque here
  std::string status;     // mission status string
  std::string abort_reason;
  int turns = 0;
  int blue_entered_turn = -1;
  double sim_end_ms = 0;
  std::vector<TurnLogRow> turn_log;
  std::vector<InjectionRecord> injections;
  std::vector<CallAnnotation> annotations;
  std::vector<FindingRecord> findings;
  std::vector<PatchRecord> patches;
  std::vector<std::string> crashed_at_end;

  bool complete() const { return status == "task_complete"; }

  nlohmann::json to_json() const;
  static RunRecord from_json(const nlohmann::json& j);
};

FindingRecord to_record(const Finding& f);
PatchRecord to_record(const Patch& p);

}  // namespace apiot
