#include "doctest.h"

#include <algorithm>

#include "apiot/netsim.hpp"
#include "apiot/overseer.hpp"

using namespace apiot;
using nlohmann::json;

namespace {

World make_world() {
  auto w = build_topology(TopologyKind::T1FlatStar,
                          default_roster(Protocol::CoAP, TopologyKind::T1FlatStar),
                          ImpairmentProfile::none(), 7);
  REQUIRE(w.ok());
  return std::move(w.value());
}

ToolCall call(const std::string& tool, const std::string& ip, json args = json::object()) {
  ToolCall c;
  c.tool = tool;
  c.target_ip = ip;
  c.args = std::move(args);
  return c;
}

}  // namespace

TEST_CASE("overseer: fourth identical call in the window is blocked") {
  World w = make_world();
  MissionState m;
  Overseer o;
  ToolCall same = call("coap_send", "192.168.100.10", {{"path", "/sensor"}});

  for (int i = 0; i < 3; ++i) CHECK(!o.review(w, m, same).blocked);
  auto v = o.review(w, m, same);
  CHECK(v.blocked);
  CHECK(*v.reason == BlockReason::Repetition);

  // Different arguments are a different tuple.
  CHECK(!o.review(w, m, call("coap_send", "192.168.100.10", {{"path", "/other"}})).blocked);
}

TEST_CASE("overseer: window evicts old entries") {
  World w = make_world();
  MissionState m;
  Overseer o;
  ToolCall same = call("stealth_check", "", {{"window_s", 60}});
  o.review(w, m, same);
  o.review(w, m, same);
  o.review(w, m, same);
  CHECK(o.window_count(same) == 3);

  // Push 20 distinct calls: the three old entries age out entirely.
  for (int i = 0; i < Overseer::kWindowSize; ++i) {
    o.review(w, m, call("stealth_check", "", {{"window_s", 100 + i}}));
  }
  CHECK(o.window_count(same) == 0);
  CHECK(!o.review(w, m, same).blocked);
}

TEST_CASE("overseer: blocked attempts still count toward the window") {
  World w = make_world();
  MissionState m;
  Overseer o;
  ToolCall same = call("udp_send", "192.168.100.10", {{"port", 5683}, {"data", "ff"}});
  for (int i = 0; i < 3; ++i) o.review(w, m, same);
  CHECK(o.review(w, m, same).blocked);
  CHECK(o.window_count(same) == 4);  // the blocked attempt was recorded too
}

TEST_CASE("overseer: semantic blocks outrank the repetition guard") {
  World w = make_world();
  MissionState m;
  Overseer o;
  const std::string dev = "192.168.100.10";

  m.believed_crashed.insert(dev);
  ToolCall hit = call("coap_send", dev, {{"message_id", 1}});
  for (int i = 0; i < 5; ++i) {
    auto v = o.review(w, m, hit);
    CHECK(v.blocked);
    CHECK(*v.reason == BlockReason::CrashedTarget);  // never downgraded to Repetition
  }
  // Recon against the same target is not gated.
  CHECK(!o.review(w, m, call("get_network_state", "")).blocked);
  m.believed_crashed.clear();

  Finding f;
  f.finding_id = 1;
  f.target_ip = dev;
  f.wire_dst_ip = dev;
  f.confirmed = true;
  m.findings.push_back(f);
  Patch p;
  p.patch_id = 1;
  p.finding_id = 1;
  p.verified = true;
  m.patches.push_back(p);
  auto v = o.review(w, m, call("coap_send", dev, {{"message_id", 2}}));
  CHECK(v.blocked);
  CHECK(*v.reason == BlockReason::AlreadyPatched);
}

TEST_CASE("overseer: no tuple exceeds three executions in any window") {
  // Structural property of the guard: simulate an adversarial caller that
  // always retries the same tuple and count executions per 20-call slice.
  World w = make_world();
  MissionState m;
  Overseer o;
  ToolCall same = call("coap_send", "192.168.100.10", {{"message_id", 9}});
  std::vector<int> executed;  // 1 = allowed
  for (int i = 0; i < 200; ++i) {
    executed.push_back(o.review(w, m, same).blocked ? 0 : 1);
  }
  for (size_t start = 0; start + Overseer::kWindowSize <= executed.size(); ++start) {
    int n = 0;
    for (size_t i = start; i < start + Overseer::kWindowSize; ++i) n += executed[i];
    CHECK(n <= Overseer::kRepetitionThreshold);
  }
}

TEST_CASE("overseer: stall guards steer, then end the mission") {
  World w = make_world();
  MissionState m;
  Overseer o;
  std::vector<InterventionKind> seen;
  for (int turn = 1; m.status == MissionStatus::Active && turn < 40; ++turn) {
    m.turn = turn;
    for (const Intervention& iv : o.on_turn_end(w, m)) seen.push_back(iv.kind);
  }
  CHECK(m.status == MissionStatus::TaskAborted);
  CHECK(m.abort_reason == "stalled for 15 turns");
  // Steering precedes termination; periodic refreshes fire along the way.
  auto find = [&](InterventionKind k) {
    return std::find(seen.begin(), seen.end(), k) - seen.begin();
  };
  REQUIRE(find(InterventionKind::Steering) < static_cast<long>(seen.size()));
  REQUIRE(find(InterventionKind::Terminate) < static_cast<long>(seen.size()));
  CHECK(find(InterventionKind::Steering) < find(InterventionKind::Terminate));
  CHECK(find(InterventionKind::StrategyRefresh) < static_cast<long>(seen.size()));
}

TEST_CASE("overseer: red-phase stall with confirmed findings forces blue") {
  World w = make_world();
  MissionState m;
  Overseer o;
  Finding f;
  f.finding_id = 1;
  f.target_ip = "192.168.100.10";
  f.confirmed = true;
  m.findings.push_back(f);
  // The echo node has no vulnerability profile, so with the one finding
  // confirmed the overseer transitions on completeness, not on stall.
  m.turn = 1;
  auto out = o.on_turn_end(w, m);
  bool attempted_gate = m.attempted_ips.count("192.168.100.10") > 0;
  CHECK(!attempted_gate);  // target never attempted: gate stays closed
  CHECK(m.phase == Phase::Red);

  m.attempted_ips.insert("192.168.100.10");
  m.turn = 2;
  out = o.on_turn_end(w, m);
  REQUIRE(out.size() == 1);
  CHECK(out[0].kind == InterventionKind::ForcePhaseTransition);
  CHECK(m.phase == Phase::Blue);
  CHECK(m.blue_entered_turn == 2);
}

TEST_CASE("overseer: blue phase with full coverage auto-completes") {
  World w = make_world();
  MissionState m;
  Overseer o;
  Finding f;
  f.finding_id = 1;
  f.target_ip = "192.168.100.10";
  f.confirmed = true;
  m.findings.push_back(f);
  Patch p;
  p.finding_id = 1;
  p.verified = true;
  m.patches.push_back(p);
  m.enter_blue(3);
  m.turn = 4;
  auto out = o.on_turn_end(w, m);
  REQUIRE(out.size() == 1);
  CHECK(out[0].kind == InterventionKind::AutoComplete);
  CHECK(m.status == MissionStatus::TaskComplete);
}
