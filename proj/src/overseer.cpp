#include "apiot/overseer.hpp"

#include <algorithm>

namespace apiot {

const char* to_string(BlockReason r) {
  switch (r) {
    case BlockReason::Repetition: return "repetition";
    case BlockReason::CrashedTarget: return "crashed_target";
    case BlockReason::AlreadyPatched: return "already_patched";
  }
  return "unknown";
}

const char* to_string(InterventionKind k) {
  switch (k) {
    case InterventionKind::Steering: return "steering";
    case InterventionKind::StrategyRefresh: return "strategy_refresh";
    case InterventionKind::ForcePhaseTransition: return "force_phase_transition";
    case InterventionKind::Terminate: return "terminate";
    case InterventionKind::AutoComplete: return "auto_complete";
  }
  return "unknown";
}

int Overseer::window_count(const ToolCall& call) const {
  std::string key = call.tool + "|" + call.target_ip + "|" + call.args_digest();
  return static_cast<int>(std::count(window_.begin(), window_.end(), key));
}

OverseerVerdict Overseer::review(const World& world, const MissionState& mission,
                                 const ToolCall& call) {
  OverseerVerdict v;

  // Precedence: semantic blocks first, the repetition guard last.
  if (is_offensive_tool(call.tool) && mission.believed_crashed.count(call.target_ip)) {
    v.blocked = true;
    v.reason = BlockReason::CrashedTarget;
    v.message = call.target_ip + " is already confirmed down; attacking it again wastes turns.";
  } else if (is_offensive_tool(call.tool)) {
    for (const Finding& f : mission.findings) {
      if (f.target_ip != call.target_ip && f.wire_dst_ip != call.target_ip) continue;
      if (!f.confirmed) continue;
      for (const Patch& p : mission.patches) {
        if (p.finding_id == f.finding_id && p.verified) {
          v.blocked = true;
          v.reason = BlockReason::AlreadyPatched;
          v.message = "a verified patch already covers " + f.target_ip + "; move on.";
        }
      }
    }
  }

  if (!v.blocked && window_count(call) >= kRepetitionThreshold) {
    v.blocked = true;
    v.reason = BlockReason::Repetition;
    v.message = "identical call repeated " + std::to_string(window_count(call)) +
                " times recently; change approach.";
  }

  (void)world;
  window_.push_back(call.tool + "|" + call.target_ip + "|" + call.args_digest());
  while (window_.size() > kWindowSize) window_.pop_front();
  return v;
}

Overseer::Snapshot Overseer::snapshot_of(const MissionState& mission) const {
  Snapshot s;
  s.findings = mission.findings.size();
  s.confirmed = mission.confirmed_count();
  s.patches = mission.patches.size();
  for (const Patch& p : mission.patches) s.verified += p.verified ? 1 : 0;
  s.attempted = mission.attempted_ips.size();
  s.phase = mission.phase;
  return s;
}

std::vector<Intervention> Overseer::on_turn_end(World& world, MissionState& mission) {
  std::vector<Intervention> out;
  Snapshot now = snapshot_of(mission);
  bool progressed = !have_last_ ||
                    now.findings != last_.findings || now.confirmed != last_.confirmed ||
                    now.patches != last_.patches || now.verified != last_.verified ||
                    now.attempted != last_.attempted || now.phase != last_.phase;
  last_ = now;
  have_last_ = true;
  turns_since_progress_ = progressed ? 0 : turns_since_progress_ + 1;

  // Mission-complete check runs before the stall guards.
  if (mission.status == MissionStatus::Active && mission.phase == Phase::Blue &&
      mission.confirmed_count() >= 1 && mission.all_confirmed_findings_patched()) {
    mission.status = MissionStatus::TaskComplete;
    out.push_back({InterventionKind::AutoComplete,
                   "all confirmed findings carry verified patches; mission complete.",
                   mission.turn});
    return out;
  }

  if (mission.status != MissionStatus::Active) return out;

  if (turns_since_progress_ >= kKillAfterStallTurns) {
    if (mission.phase == Phase::Red && mission.confirmed_count() >= 1) {
      mission.enter_blue(mission.turn);
      out.push_back({InterventionKind::ForcePhaseTransition,
                     "no red-phase progress in " + std::to_string(kKillAfterStallTurns) +
                         " turns; switching to defense with the confirmed findings.",
                     mission.turn});
      turns_since_progress_ = 0;
    } else {
      mission.status = MissionStatus::TaskAborted;
      mission.abort_reason = "stalled for " + std::to_string(kKillAfterStallTurns) + " turns";
      out.push_back({InterventionKind::Terminate, mission.abort_reason, mission.turn});
    }
    return out;
  }

  if (turns_since_progress_ == kSteerAfterStallTurns) {
    out.push_back({InterventionKind::Steering,
                   mission.phase == Phase::Red
                       ? "no new findings recently; pick an unattempted target from "
                         "get_actionable_targets and probe it."
                       : "no patch progress recently; install a rule for each confirmed "
                         "finding and verify it with verify_patch.",
                   mission.turn});
  }

  // Red phase done when every profiled target has been worked and nothing is
  // left unconfirmed; needs at least one confirmed finding so an agent that
  // merely scanned everything is not waved through.
  if (mission.phase == Phase::Red && mission.confirmed_count() >= 1) {
    bool all_confirmed = true;
    for (const Finding& f : mission.findings) all_confirmed &= f.confirmed;
    bool all_attempted = true;
    for (const Device* d : world.devices()) {
      if (d->spec().vuln.triggers.empty()) continue;
      all_attempted &= mission.attempted_ips.count(d->spec().ip) > 0;
    }
    if (all_confirmed && all_attempted) {
      mission.enter_blue(mission.turn);
      out.push_back({InterventionKind::ForcePhaseTransition,
                     "every vulnerable target has a confirmed finding; moving to defense.",
                     mission.turn});
      turns_since_progress_ = 0;
      return out;
    }
  }

  if (mission.turn > 0 && mission.turn % kRefreshEveryTurns == 0) {
    out.push_back({InterventionKind::StrategyRefresh,
                   mission.phase == Phase::Red
                       ? "status: " + std::to_string(mission.confirmed_count()) +
                             " confirmed finding(s); confirm exploits with verify_crash before "
                             "moving on."
                       : "status: " + std::to_string(mission.patches.size()) +
                             " patch(es) installed; every confirmed finding needs a verified "
                             "patch.",
                   mission.turn});
  }

  return out;
}

}  // namespace apiot
