#pragma once

#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "apiot/mission.hpp"
#include "apiot/netsim.hpp"
#include "apiot/tools.hpp"

namespace apiot {

enum class BlockReason { Repetition, CrashedTarget, AlreadyPatched };

const char* to_string(BlockReason r);

struct OverseerVerdict {
  bool blocked = false;
  std::optional<BlockReason> reason;
  std::string message;
};

enum class InterventionKind {
  Steering,
  StrategyRefresh,
  ForcePhaseTransition,
  Terminate,
  AutoComplete,
};

const char* to_string(InterventionKind k);

struct Intervention {
  InterventionKind kind;
  std::string message;
  int turn = 0;
};

// Deterministic supervisor over the agent loop. review() gates each call
// pre-execution; on_turn_end() may inject guidance or end the mission.
class Overseer {
 public:
  static constexpr int kWindowSize = 20;
  static constexpr int kRepetitionThreshold = 3;
  static constexpr int kSteerAfterStallTurns = 8;
  static constexpr int kKillAfterStallTurns = 15;
  static constexpr int kRefreshEveryTurns = 5;

  // Every reviewed call, blocked or not, lands in the sliding window.
  OverseerVerdict review(const World& world, const MissionState& mission, const ToolCall& call);

  std::vector<Intervention> on_turn_end(World& world, MissionState& mission);

  int turns_since_progress() const { return turns_since_progress_; }
  int window_count(const ToolCall& call) const;

 private:
  struct Snapshot {
    size_t findings = 0;
    int confirmed = 0;
    size_t patches = 0;
    int verified = 0;
    size_t attempted = 0;
    Phase phase = Phase::Red;
  };
  Snapshot snapshot_of(const MissionState& mission) const;

  std::deque<std::string> window_;  // "tool|ip|digest" keys
  Snapshot last_;
  bool have_last_ = false;
  int turns_since_progress_ = 0;
};

}  // namespace apiot
