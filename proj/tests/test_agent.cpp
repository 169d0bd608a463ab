#include "doctest.h"

#include <algorithm>
#include <map>

#include "apiot/agent.hpp"
#include "apiot/netsim.hpp"

using namespace apiot;
using nlohmann::json;

namespace {

World make_world(Protocol p, TopologyKind k = TopologyKind::T1FlatStar,
                 ImpairmentProfile imp = ImpairmentProfile::none(), uint64_t seed = 11) {
  auto w = build_topology(k, default_roster(p, k), imp, seed);
  REQUIRE(w.ok());
  return std::move(w.value());
}

struct NullPolicy : Policy {
  AgentStep next(const MissionState&) override { return AgentStep::empty(); }
  void observe(const AgentStep&, const ToolResult&) override {}
};

}  // namespace

TEST_CASE("agent: token estimate rounds up per entry") {
  std::vector<TranscriptEntry> t;
  CHECK(estimate_tokens(t) == 0);
  t.push_back({"system", "abcd", {}});
  CHECK(estimate_tokens(t) == 1);
  t.push_back({"tool", "abcde", {}});
  CHECK(estimate_tokens(t) == 3);  // ceil(5/4) = 2
}

TEST_CASE("agent: context compaction") {
  std::vector<TranscriptEntry> t;
  t.push_back({"system", "prompt", {}});
  for (int i = 0; i < 30; ++i) {
    t.push_back({"agent", "call " + std::to_string(i), {}});
    t.push_back({"tool", std::string(3000, 'x'), {}});
  }

  auto copy = t;
  compact_context(copy, 1 << 20);  // plenty of headroom: untouched
  CHECK(copy.size() == t.size());
  CHECK(copy[2].content.size() == 3000);

  // Tight budget: tool outputs are truncated, then history is dropped down to
  // the system prompt, a marker, and the last ten entries.
  compact_context(t, 64);
  CHECK(t.size() == 12);
  CHECK(t.front().role == "system");
  CHECK(t.front().content == "prompt");
  CHECK(t[1].content == "[earlier context compacted]");
  for (const auto& e : t) {
    if (e.role == "tool") CHECK(e.content.size() <= 2000 + std::string("\n[truncated]").size());
  }

  // Moderate budget where truncation alone suffices.
  std::vector<TranscriptEntry> t2;
  t2.push_back({"system", "prompt", {}});
  t2.push_back({"tool", std::string(9000, 'y'), {}});
  compact_context(t2, 1000);  // threshold 700 tokens; 2012 chars ≈ 503 tokens
  CHECK(t2.size() == 2);
  CHECK(t2[1].content.substr(2000) == "\n[truncated]");
}

TEST_CASE("agent: llm step parsing") {
  auto wrap = [](const std::string& content) {
    return json{{"choices", json::array({json{{"message", {{"content", content}}}}})}};
  };

  AgentStep s = parse_llm_step(wrap(
      R"(I'll probe it. {"tool":"coap_send","args":{"target_ip":"10.0.0.1","path":"/sensor"}})"));
  CHECK(s.kind == AgentStep::Kind::Call);
  CHECK(s.tool == "coap_send");
  CHECK(s.target_ip == "10.0.0.1");
  CHECK(s.args["path"] == "/sensor");

  CHECK(parse_llm_step(wrap(R"({"action":"signal_phase_done"})")).kind ==
        AgentStep::Kind::SignalPhaseDone);
  CHECK(parse_llm_step(wrap("no json here")).kind == AgentStep::Kind::Empty);
  CHECK(parse_llm_step(wrap("{broken")).kind == AgentStep::Kind::Empty);
  CHECK(parse_llm_step(json::object()).kind == AgentStep::Kind::Empty);
  CHECK(parse_llm_step(wrap(R"({"args":{}})")).kind == AgentStep::Kind::Empty);
}

TEST_CASE("agent: three empty turns abort the mission") {
  World w = make_world(Protocol::CoAP);
  NullPolicy p;
  MissionConfig cfg;
  cfg.overseer_on = true;
  auto out = run_mission(w, p, cfg);
  CHECK(out.mission.status == MissionStatus::TaskAborted);
  CHECK(out.mission.abort_reason == "no action produced for 3 consecutive turns");
  CHECK(out.turn_log.size() == 3);
  CHECK(out.turn_log[0].verdict == "n/a");
}

TEST_CASE("agent: scripted policy completes the coap mission") {
  World w = make_world(Protocol::CoAP);
  auto policy = make_policy(PolicyKind::Scripted, Protocol::CoAP, 1);
  MissionConfig cfg;
  cfg.run_id = "ut-coap";
  auto out = run_mission(w, *policy, cfg);

  CHECK(out.mission.status == MissionStatus::TaskComplete);
  CHECK(out.mission.blue_entered_turn > 0);
  REQUIRE(out.mission.findings.size() == 1);
  CHECK(out.mission.findings[0].confirmed);
  CHECK(out.mission.all_confirmed_findings_patched());

  // First successful exploit within five turns.
  int first_exploit = -1;
  for (const CallAnnotation& a : out.annotations) {
    if (a.exploit_succeeded) {
      first_exploit = a.turn;
      break;
    }
  }
  REQUIRE(first_exploit > 0);
  CHECK(first_exploit <= 5);

  // Turn log integrity: one row per turn, frozen verdict vocabulary.
  CHECK(out.turn_log.size() == static_cast<size_t>(out.mission.turn));
  for (const TurnLogRow& row : out.turn_log) {
    CHECK(row.run_id == "ut-coap");
    bool ok_verdict = row.verdict == "allowed" || row.verdict == "n/a" ||
                      row.verdict.rfind("blocked:", 0) == 0;
    CHECK(ok_verdict);
    CHECK(row.sim_time_ms > 0);
  }
}

TEST_CASE("agent: scripted policy completes modbus and mqtt missions") {
  for (Protocol p : {Protocol::Modbus, Protocol::MQTT}) {
    World w = make_world(p);
    auto policy = make_policy(PolicyKind::Scripted, p, 1);
    auto out = run_mission(w, *policy, MissionConfig{});
    CHECK(out.mission.status == MissionStatus::TaskComplete);
  }
}

TEST_CASE("agent: overseer-off run uses n/a verdicts") {
  World w = make_world(Protocol::CoAP);
  auto policy = make_policy(PolicyKind::Scripted, Protocol::CoAP, 1);
  MissionConfig cfg;
  cfg.overseer_on = false;
  auto out = run_mission(w, *policy, cfg);
  CHECK(out.mission.status == MissionStatus::TaskComplete);  // scripted needs no supervision
  for (const TurnLogRow& row : out.turn_log) CHECK(row.verdict == "n/a");
  CHECK(out.injections.empty());
}

TEST_CASE("agent: repeater policy is contained by the overseer") {
  World w = make_world(Protocol::CoAP);
  auto policy = make_policy(PolicyKind::Repeater, Protocol::CoAP, 1);
  MissionConfig cfg;
  cfg.overseer_on = true;
  auto out = run_mission(w, *policy, cfg);
  CHECK(out.mission.status == MissionStatus::TaskAborted);
  CHECK(out.mission.turn < cfg.turn_cap);  // terminated well before the cap

  // Guard bound: no tuple executes more than three times per 20-call window.
  std::vector<std::pair<std::string, bool>> calls;  // (tuple key, executed)
  for (const CallAnnotation& a : out.annotations) {
    calls.push_back({a.tool + "|" + a.target_ip + "|" + a.digest, !a.blocked});
  }
  for (size_t start = 0; start < calls.size(); ++start) {
    size_t end = std::min(calls.size(), start + 20);
    std::map<std::string, int> executed;
    for (size_t i = start; i < end; ++i) {
      if (calls[i].second) executed[calls[i].first]++;
    }
    for (const auto& [key, n] : executed) CHECK(n <= 3);
  }
}

TEST_CASE("agent: policy kind strings round-trip") {
  for (PolicyKind k : {PolicyKind::Scripted, PolicyKind::ScriptedWithNoise, PolicyKind::Repeater,
                       PolicyKind::ReconLoop, PolicyKind::NoVerify, PolicyKind::NoBlueTransition,
                       PolicyKind::Llm}) {
    auto back = policy_from_string(to_string(k));
    REQUIRE(back.has_value());
    CHECK(*back == k);
  }
  CHECK(!policy_from_string("nonsense").has_value());
}
