#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "apiot/record.hpp"

namespace apiot {

struct RunMetrics {
  int turns = 0;
  int tool_calls = 0;          // includes blocked attempts
  int blocked_calls = 0;
  int redundant_calls = 0;     // tuple already seen within the previous 20 calls
  double redundant_rate = 0;   // redundant / tool_calls
  int injections = 0;
  double intervention_rate = 0;  // injections / turns
  int stall_events = 0;          // sum of (streak length - 1) over identical-call streaks
  std::optional<double> time_to_remediate_ms;  // first confirmed exploit -> last verified patch
  bool success = false;
};

RunMetrics compute_metrics(const RunRecord& record);

enum class DegeneratePattern {
  ExploitWithoutVerification,
  RepetitiveSameToolLoop,
  InfiniteReconLoop,
  NoBlueTransition,
  PrematurePhaseTransition,
};

const char* to_string(DegeneratePattern p);

std::set<DegeneratePattern> detect_degenerate(const RunRecord& record);

enum class FailureCategory {
  InfrastructureFailure,
  ProtocolConfusion,
  PhaseDeadlock,
  StallAndRepeat,
};

const char* to_string(FailureCategory c);

// Only meaningful for unsuccessful runs; categories are checked in a fixed
// precedence order and exactly one is returned.
FailureCategory classify_failure(const RunRecord& record);

struct WilsonInterval {
  double lo = 0;
  double hi = 0;
};

// 95% score interval by default (z for two-sided confidence `conf`).
WilsonInterval wilson_interval(int successes, int trials, double conf = 0.95);
double inverse_normal_cdf(double p);

}  // namespace apiot
