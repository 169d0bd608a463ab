#include "apiot/mission.hpp"

namespace apiot {

const char* to_string(Phase p) { return p == Phase::Red ? "red" : "blue"; }

const char* to_string(MissionStatus s) {
  switch (s) {
    case MissionStatus::Active: return "active";
    case MissionStatus::TaskComplete: return "task_complete";
    case MissionStatus::TaskAborted: return "task_aborted";
    case MissionStatus::TimedOut: return "timed_out";
  }
  return "unknown";
}

Finding* MissionState::finding_by_id(int id) {
  for (Finding& f : findings) {
    if (f.finding_id == id) return &f;
  }
  return nullptr;
}

Finding* MissionState::finding_for(const std::string& target_ip, VulnClass vuln) {
  for (Finding& f : findings) {
    if (f.target_ip == target_ip && f.vuln == vuln) return &f;
  }
  return nullptr;
}

bool MissionState::all_confirmed_findings_patched() const {
  for (const Finding& f : findings) {
    if (!f.confirmed) continue;
    bool patched = false;
    for (const Patch& p : patches) {
      if (p.finding_id == f.finding_id && p.verified) patched = true;
    }
    if (!patched) return false;
  }
  return true;
}

int MissionState::confirmed_count() const {
  int n = 0;
  for (const Finding& f : findings) n += f.confirmed ? 1 : 0;
  return n;
}

}  // namespace apiot
