#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "apiot/mission.hpp"
#include "apiot/netsim.hpp"
#include "apiot/overseer.hpp"
#include "apiot/record.hpp"
#include "apiot/tools.hpp"

namespace apiot {

enum class PolicyKind {
  Scripted,
  ScriptedWithNoise,
  Repeater,
  ReconLoop,
  NoVerify,
  NoBlueTransition,
  Llm,
};

const char* to_string(PolicyKind k);
std::optional<PolicyKind> policy_from_string(const std::string& s);

struct AgentStep {
  enum class Kind { Call, SignalPhaseDone, Empty };
  Kind kind = Kind::Empty;
  std::string tool;
  std::string target_ip;
  nlohmann::json args = nlohmann::json::object();

  static AgentStep call(std::string tool, std::string ip,
                        nlohmann::json args = nlohmann::json::object()) {
    return {Kind::Call, std::move(tool), std::move(ip), std::move(args)};
  }
  static AgentStep signal() { return {Kind::SignalPhaseDone, "", "", {}}; }
  static AgentStep empty() { return {Kind::Empty, "", "", {}}; }
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual AgentStep next(const MissionState& mission) = 0;
  // Called after every step with the (possibly synthetic) result.
  virtual void observe(const AgentStep& step, const ToolResult& result) = 0;
  virtual void on_injection(const Intervention&) {}
};

std::unique_ptr<Policy> make_policy(PolicyKind kind, Protocol protocol, uint64_t seed);

struct MissionConfig {
  std::string run_id = "run";
  int turn_cap = 60;
  bool overseer_on = true;
  double turn_seconds = 5.0;           // virtual time per agent turn
  int context_window_tokens = 32768;   // compaction threshold base
};

struct MissionOutcome {
  MissionState mission;
  std::vector<TurnLogRow> turn_log;
  std::vector<InjectionRecord> injections;
  std::vector<CallAnnotation> annotations;
};

MissionOutcome run_mission(World& world, Policy& policy, const MissionConfig& cfg);

// ~4 chars per token, rounded up per entry.
int estimate_tokens(const std::vector<TranscriptEntry>& transcript);

// Compacts in place once the estimate crosses 70% of the window: tool results
// are truncated to 2000 chars first, then all but the system prompt and the
// last five exchanges are dropped.
void compact_context(std::vector<TranscriptEntry>& transcript, int window_tokens);

// Translates one chat-completions response body into a step. Exposed
// separately so it can be tested against fixture payloads.
AgentStep parse_llm_step(const nlohmann::json& chat_response);

}  // namespace apiot
