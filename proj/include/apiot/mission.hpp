#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "apiot/bytes.hpp"
#include "apiot/vuln.hpp"

#include "json.hpp"

namespace apiot {

enum class Phase { Red, Blue };
enum class MissionStatus { Active, TaskComplete, TaskAborted, TimedOut };

const char* to_string(Phase p);
const char* to_string(MissionStatus s);

// A confirmed (target, vulnerability class, exploit frame) triple plus the
// wire coordinates needed to replay it.
struct Finding {
  int finding_id = 0;
  std::string target_ip;
  VulnClass vuln = VulnClass::CoapOptionOverflow;
  Bytes exploit_frame;
  std::string wire_dst_ip;  // where the frame is sent (broker for MQTT)
  Transport wire_transport = Transport::UDP;
  uint16_t wire_port = 0;
  bool confirmed = false;
  int exploit_turn = -1;
  int confirmed_turn = -1;
  double exploit_time_ms = 0;
};

struct Patch {
  int patch_id = 0;
  int finding_id = -1;  // -1 for orphans
  uint64_t rule_id = 0;
  bool verified = false;
  bool orphan = false;
  int verified_turn = -1;
  double verified_time_ms = 0;
};

struct TranscriptEntry {
  std::string role;  // system | agent | tool | overseer
  std::string content;
  nlohmann::json meta;  // structured payload for deterministic policies
};

struct MissionState {
  Phase phase = Phase::Red;
  MissionStatus status = MissionStatus::Active;
  std::string abort_reason;
  int turn = 0;
  int blue_entered_turn = -1;
  std::vector<Finding> findings;
  std::vector<Patch> patches;
  std::vector<TranscriptEntry> transcript;

  // Belief/bookkeeping the tool layer and overseer share.
  std::set<std::string> responsive_ips;   // produced a response at some point
  std::set<std::string> believed_crashed; // confirmed crashed, not seen recovered
  std::set<std::string> attempted_ips;    // >=1 offensive call against this ip
  int next_finding_id = 1;
  int next_patch_id = 1;

  Finding* finding_by_id(int id);
  Finding* finding_for(const std::string& target_ip, VulnClass vuln);

  bool all_confirmed_findings_patched() const;
  int confirmed_count() const;

  void enter_blue(int at_turn) {
    if (phase == Phase::Red) {
      phase = Phase::Blue;
      blue_entered_turn = at_turn;
    }
  }
};

}  // namespace apiot
