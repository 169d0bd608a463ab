#include "apiot/telemetry.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>

#include "apiot/tools.hpp"

namespace apiot {

namespace {

std::string tuple_key(const CallAnnotation& a) {
  return a.tool + "|" + a.target_ip + "|" + a.digest;
}

}  // namespace

RunMetrics compute_metrics(const RunRecord& record) {
  RunMetrics m;
  m.turns = record.turns;
  m.injections = static_cast<int>(record.injections.size());
  m.success = record.complete();

  std::deque<std::string> window;
  std::string prev_key;
  int streak = 0;
  for (const CallAnnotation& a : record.annotations) {
    ++m.tool_calls;
    if (a.blocked) ++m.blocked_calls;
    std::string key = tuple_key(a);
    if (std::count(window.begin(), window.end(), key) > 0) ++m.redundant_calls;
    window.push_back(key);
    if (window.size() > 20) window.pop_front();

    if (key == prev_key) {
      ++streak;
      if (streak >= 2) ++m.stall_events;  // each extra repeat in a streak
    } else {
      prev_key = key;
      streak = 1;
    }
  }
  if (m.tool_calls > 0) m.redundant_rate = double(m.redundant_calls) / m.tool_calls;
  if (m.turns > 0) m.intervention_rate = double(m.injections) / m.turns;

  std::optional<double> first_confirmed;
  for (const FindingRecord& f : record.findings) {
    if (!f.confirmed) continue;
    if (!first_confirmed || f.exploit_time_ms < *first_confirmed) {
      first_confirmed = f.exploit_time_ms;
    }
  }
  std::optional<double> last_verified;
  for (const PatchRecord& p : record.patches) {
    if (!p.verified) continue;
    if (!last_verified || p.verified_time_ms > *last_verified) {
      last_verified = p.verified_time_ms;
    }
  }
  if (first_confirmed && last_verified) {
    m.time_to_remediate_ms = *last_verified - *first_confirmed;
  }
  return m;
}

const char* to_string(DegeneratePattern p) {
  switch (p) {
    case DegeneratePattern::ExploitWithoutVerification: return "exploit_without_verification";
    case DegeneratePattern::RepetitiveSameToolLoop: return "repetitive_same_tool_loop";
    case DegeneratePattern::InfiniteReconLoop: return "infinite_recon_loop";
    case DegeneratePattern::NoBlueTransition: return "no_blue_transition";
    case DegeneratePattern::PrematurePhaseTransition: return "premature_phase_transition";
  }
  return "unknown";
}

std::set<DegeneratePattern> detect_degenerate(const RunRecord& record) {
  std::set<DegeneratePattern> out;

  // Exploit landed but no crash verification ever followed it.
  int last_verify_turn = -1;
  for (const CallAnnotation& a : record.annotations) {
    if (a.tool == "verify_crash" && !a.blocked) last_verify_turn = std::max(last_verify_turn, a.turn);
  }
  for (const CallAnnotation& a : record.annotations) {
    if (a.exploit_succeeded && a.turn > last_verify_turn) {
      out.insert(DegeneratePattern::ExploitWithoutVerification);
      break;
    }
  }

  std::map<std::string, int> executions;
  for (const CallAnnotation& a : record.annotations) {
    if (!a.blocked) ++executions[tuple_key(a)];
  }
  for (const auto& [key, n] : executions) {
    if (n > 3) {
      out.insert(DegeneratePattern::RepetitiveSameToolLoop);
      break;
    }
  }

  int recon_streak = 0, longest_recon = 0;
  for (const CallAnnotation& a : record.annotations) {
    recon_streak = is_recon_tool(a.tool) ? recon_streak + 1 : 0;
    longest_recon = std::max(longest_recon, recon_streak);
  }
  if (longest_recon >= 10) out.insert(DegeneratePattern::InfiniteReconLoop);

  bool any_confirmed = false;
  for (const FindingRecord& f : record.findings) any_confirmed |= f.confirmed;
  bool forced_blue = false;
  for (const InjectionRecord& inj : record.injections) {
    if (inj.kind == "force_phase_transition") forced_blue = true;
  }
  if (any_confirmed && record.patches.empty() &&
      (record.blue_entered_turn < 0 || forced_blue)) {
    out.insert(DegeneratePattern::NoBlueTransition);
  }

  if (record.blue_entered_turn >= 0) {
    bool confirmed_before_blue = false;
    for (const FindingRecord& f : record.findings) {
      if (f.confirmed && f.confirmed_turn >= 0 && f.confirmed_turn <= record.blue_entered_turn) {
        confirmed_before_blue = true;
      }
    }
    if (!confirmed_before_blue) out.insert(DegeneratePattern::PrematurePhaseTransition);
  }

  return out;
}

const char* to_string(FailureCategory c) {
  switch (c) {
    case FailureCategory::InfrastructureFailure: return "infrastructure_failure";
    case FailureCategory::ProtocolConfusion: return "protocol_confusion";
    case FailureCategory::PhaseDeadlock: return "phase_deadlock";
    case FailureCategory::StallAndRepeat: return "stall_and_repeat";
  }
  return "unknown";
}

FailureCategory classify_failure(const RunRecord& record) {
  if (record.turns == 0 || record.abort_reason.rfind("infrastructure", 0) == 0) {
    return FailureCategory::InfrastructureFailure;
  }

  int offensive_with_target = 0, mismatched = 0;
  for (const CallAnnotation& a : record.annotations) {
    if (!a.offensive || !a.protocol_match) continue;
    ++offensive_with_target;
    if (!*a.protocol_match) ++mismatched;
  }
  if (offensive_with_target > 0 && mismatched * 2 > offensive_with_target) {
    return FailureCategory::ProtocolConfusion;
  }

  bool any_confirmed = false;
  for (const FindingRecord& f : record.findings) any_confirmed |= f.confirmed;
  bool any_verified_patch = false;
  for (const PatchRecord& p : record.patches) any_verified_patch |= p.verified;
  if (any_confirmed && (record.blue_entered_turn < 0 || !any_verified_patch)) {
    return FailureCategory::PhaseDeadlock;
  }

  return FailureCategory::StallAndRepeat;
}

// Acklam's rational approximation; |relative error| < 1.15e-9 over (0,1).
double inverse_normal_cdf(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1 - plow;
  if (p <= 0 || p >= 1) return p <= 0 ? -HUGE_VAL : HUGE_VAL;
  if (p < plow) {
    double q = std::sqrt(-2 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  if (p > phigh) {
    double q = std::sqrt(-2 * std::log(1 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  double q = p - 0.5, r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

WilsonInterval wilson_interval(int successes, int trials, double conf) {
  if (trials <= 0) return {0, 0};
  double z = inverse_normal_cdf(1 - (1 - conf) / 2);
  double n = trials;
  double p = double(successes) / n;
  double z2 = z * z;
  double denom = 1 + z2 / n;
  double center = (p + z2 / (2 * n)) / denom;
  double margin = z / denom * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n));
  return {std::max(0.0, center - margin), std::min(1.0, center + margin)};
}

}  // namespace apiot
