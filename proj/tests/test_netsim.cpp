#include "doctest.h"

#include <cmath>

#include "apiot/coap.hpp"
#include "apiot/modbus.hpp"
#include "apiot/netsim.hpp"

using namespace apiot;

namespace {

World make_world(Protocol p, TopologyKind k, ImpairmentProfile imp = ImpairmentProfile::none(),
                 uint64_t seed = 1) {
  auto w = build_topology(k, default_roster(p, k), imp, seed);
  REQUIRE(w.ok());
  return std::move(w.value());
}

Bytes benign_coap(uint16_t mid) {
  coap::Message m;
  m.code = coap::kCodeGet;
  m.message_id = mid;
  m.options = coap::uri_path_options("/sensor");
  return coap::encode(m).value();
}

Bytes benign_modbus(uint16_t tid) {
  modbus::Adu a;
  a.transaction_id = tid;
  a.unit_id = 1;
  a.function_code = modbus::kFcReadHolding;
  put_u16(a.data, 0);
  put_u16(a.data, 2);
  return modbus::encode(a).value();
}

}  // namespace

TEST_CASE("netsim: default rosters build on every topology") {
  for (auto k : {TopologyKind::T1FlatStar, TopologyKind::T2PurdueSegmented,
                 TopologyKind::T3EdgeFogCloud, TopologyKind::Mesh15}) {
    for (auto p : {Protocol::CoAP, Protocol::Modbus, Protocol::MQTT}) {
      World w = make_world(p, k);
      CHECK(w.attacker_ip() == "192.168.100.99");
      CHECK(!w.devices().empty());
    }
  }
  World mesh = make_world(Protocol::CoAP, TopologyKind::Mesh15);
  CHECK(mesh.devices().size() == 14);  // attacker is the fifteenth node
}

TEST_CASE("netsim: build validation errors") {
  auto roster = default_roster(Protocol::CoAP, TopologyKind::T2PurdueSegmented);
  // Strip the gateway: segmented topologies cannot route.
  std::vector<DeviceSpec> no_gw(roster.begin() + 1, roster.end());
  CHECK(build_topology(TopologyKind::T2PurdueSegmented, no_gw, ImpairmentProfile::none(), 1)
            .error() == BuildError::MissingGateway);

  auto dup = default_roster(Protocol::CoAP, TopologyKind::T1FlatStar);
  dup.push_back(dup.back());
  CHECK(build_topology(TopologyKind::T1FlatStar, dup, ImpairmentProfile::none(), 1).error() ==
        BuildError::DuplicateIp);

  auto wrong = default_roster(Protocol::CoAP, TopologyKind::T1FlatStar);
  wrong[0].ip = "10.0.0.1";
  CHECK(build_topology(TopologyKind::T1FlatStar, wrong, ImpairmentProfile::none(), 1).error() ==
        BuildError::SubnetMismatch);
}

TEST_CASE("netsim: same-segment request/response on T1") {
  World w = make_world(Protocol::CoAP, TopologyKind::T1FlatStar);
  auto out = w.transmit(w.attacker_ip(), "192.168.100.10", Transport::UDP, 5683, benign_coap(1));
  CHECK(out.kind == OutcomeKind::Delivered);
  REQUIRE(out.response);
  CHECK(coap::decode(*out.response).value().code == coap::kCodeContent);
}

TEST_CASE("netsim: multi-hop routing reaches the OT cell on T3") {
  World w = make_world(Protocol::Modbus, TopologyKind::T3EdgeFogCloud);
  CHECK(w.reachable_from_attacker("192.168.210.10"));
  auto out = w.transmit(w.attacker_ip(), "192.168.210.10", Transport::TCP, 502, benign_modbus(1));
  CHECK(out.kind == OutcomeKind::Delivered);
  CHECK(!w.reachable_from_attacker("10.9.9.9"));  // off-topology address
}

TEST_CASE("netsim: heavy impairment drop fraction is the per-hop loss on T1") {
  World w = make_world(Protocol::CoAP, TopologyKind::T1FlatStar, ImpairmentProfile::heavy(), 77);
  int dropped = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    auto out = w.transmit(w.attacker_ip(), "192.168.100.20", Transport::UDP, 4242,
                          benign_coap(static_cast<uint16_t>(i)));
    if (out.kind == OutcomeKind::Dropped) ++dropped;
  }
  double frac = double(dropped) / n;
  CHECK(frac > 0.17);
  CHECK(frac < 0.23);
}

TEST_CASE("netsim: medium impairment rtt stays in the jitter envelope") {
  World w = make_world(Protocol::CoAP, TopologyKind::T1FlatStar, ImpairmentProfile::medium(), 3);
  for (int i = 0; i < 200; ++i) {
    auto out = w.transmit(w.attacker_ip(), "192.168.100.20", Transport::UDP, 4242,
                          benign_coap(static_cast<uint16_t>(i)));
    if (out.kind != OutcomeKind::Delivered) continue;
    CHECK(out.rtt_ms >= 2 * (50.0 - 10.0));
    CHECK(out.rtt_ms <= 2 * (50.0 + 10.0));
  }
}

TEST_CASE("netsim: udp outcomes are opaque, tcp outcomes are not") {
  World w = make_world(Protocol::Modbus, TopologyKind::T3EdgeFogCloud);
  const std::string dev = "192.168.210.10";

  // Closed port.
  CHECK(w.transmit(w.attacker_ip(), dev, Transport::UDP, 9999, {1}).kind ==
        OutcomeKind::Dropped);
  CHECK(w.transmit(w.attacker_ip(), dev, Transport::TCP, 9999, {1}).kind ==
        OutcomeKind::Refused);

  // No route at all.
  CHECK(w.transmit(w.attacker_ip(), "172.16.0.1", Transport::UDP, 502, {1}).kind ==
        OutcomeKind::Dropped);
  CHECK(w.transmit(w.attacker_ip(), "172.16.0.1", Transport::TCP, 502, {1}).kind ==
        OutcomeKind::Timeout);

  // Filtered by a rule on the path gateway.
  DefensiveRule drop_tcp;
  drop_tcp.kind = IptablesDrop{Transport::TCP, 502, dev};
  drop_tcp.installed_at = *w.default_install_point(dev);
  REQUIRE(w.install_rule(drop_tcp).ok());
  CHECK(w.transmit(w.attacker_ip(), dev, Transport::TCP, 502, benign_modbus(9)).kind ==
        OutcomeKind::BlockedTimeout);

  DefensiveRule drop_udp;
  drop_udp.kind = IptablesDrop{Transport::UDP, 5683, dev};
  drop_udp.installed_at = *w.default_install_point(dev);
  REQUIRE(w.install_rule(drop_udp).ok());
  CHECK(w.transmit(w.attacker_ip(), dev, Transport::UDP, 5683, {1}).kind ==
        OutcomeKind::Dropped);  // indistinguishable from loss
}

TEST_CASE("netsim: crashed target is silent over udp, refused over tcp") {
  World w = make_world(Protocol::Modbus, TopologyKind::T1FlatStar);
  const std::string dev = "192.168.100.10";
  auto out = w.transmit(w.attacker_ip(), dev, Transport::TCP, 502,
                        modbus::encode(
                            [] {
                              modbus::Adu a;
                              a.function_code = 3;
                              put_u16(a.data, 0);
                              put_u16(a.data, 1);
                              return a;
                            }(),
                            0xFFFF)
                            .value());
  CHECK(out.target_crashed);
  CHECK(w.transmit(w.attacker_ip(), dev, Transport::TCP, 502, benign_modbus(2)).kind ==
        OutcomeKind::Refused);
  CHECK(w.probe(w.attacker_ip(), dev, Transport::TCP, 502).kind == OutcomeKind::Refused);
  CHECK(w.crashed_ips() == std::vector<std::string>{dev});

  // Autonomous recovery after the reboot delay.
  w.advance(31000.0);
  CHECK(w.transmit(w.attacker_ip(), dev, Transport::TCP, 502, benign_modbus(3)).kind ==
        OutcomeKind::Delivered);
}

TEST_CASE("netsim: rule installation is idempotent and scoped") {
  World w = make_world(Protocol::CoAP, TopologyKind::T2PurdueSegmented);
  const std::string dev = "192.168.200.10";

  DefensiveRule r;
  r.kind = IptablesDrop{Transport::UDP, 5683, dev};
  r.installed_at = *w.default_install_point(dev);
  CHECK(r.installed_at == "gw-1");  // last gateway on the attacker path
  auto id1 = w.install_rule(r);
  auto id2 = w.install_rule(r);
  REQUIRE(id1.ok());
  REQUIRE(id2.ok());
  CHECK(id1.value() == id2.value());
  CHECK(w.rules().size() == 1);

  // The rule protects dev, not its neighbours.
  CHECK(w.transmit(w.attacker_ip(), dev, Transport::UDP, 5683, benign_coap(1)).kind ==
        OutcomeKind::Dropped);
  CHECK(w.transmit(w.attacker_ip(), "192.168.100.20", Transport::UDP, 4242, {1}).kind ==
        OutcomeKind::Delivered);

  DefensiveRule bogus;
  bogus.kind = CoapRateLimit{dev, 0.0};
  bogus.installed_at = "gw-1";
  CHECK(!w.install_rule(bogus).ok());
  DefensiveRule nowhere;
  nowhere.kind = IptablesDrop{Transport::UDP, 5683, dev};
  nowhere.installed_at = "gw-404";
  CHECK(!w.install_rule(nowhere).ok());
}

TEST_CASE("netsim: modbus function-code filter is selective") {
  World w = make_world(Protocol::Modbus, TopologyKind::T1FlatStar);
  const std::string dev = "192.168.100.10";
  DefensiveRule r;
  r.kind = ModbusFcFilter{dev, {modbus::kFcWriteSingle}};
  r.installed_at = *w.default_install_point(dev);
  REQUIRE(w.install_rule(r).ok());

  CHECK(w.transmit(w.attacker_ip(), dev, Transport::TCP, 502, benign_modbus(1)).kind ==
        OutcomeKind::Delivered);  // reads pass
  modbus::Adu write;
  write.function_code = modbus::kFcWriteSingle;
  put_u16(write.data, 0);
  put_u16(write.data, 1);
  CHECK(w.transmit(w.attacker_ip(), dev, Transport::TCP, 502,
                   modbus::encode(write).value()).kind == OutcomeKind::BlockedTimeout);
}

TEST_CASE("netsim: coap rate limit is a per-source token bucket") {
  World w = make_world(Protocol::CoAP, TopologyKind::T1FlatStar);
  const std::string dev = "192.168.100.10";
  DefensiveRule r;
  r.kind = CoapRateLimit{dev, 2.0};
  r.installed_at = *w.default_install_point(dev);
  REQUIRE(w.install_rule(r).ok());

  // Burst: the first two fit the bucket, the third is shed.
  CHECK(w.transmit(w.attacker_ip(), dev, Transport::UDP, 5683, benign_coap(1)).kind ==
        OutcomeKind::Delivered);
  CHECK(w.transmit(w.attacker_ip(), dev, Transport::UDP, 5683, benign_coap(2)).kind ==
        OutcomeKind::Delivered);
  CHECK(w.transmit(w.attacker_ip(), dev, Transport::UDP, 5683, benign_coap(3)).kind ==
        OutcomeKind::Dropped);

  // Tokens refill with virtual time.
  w.advance(2000.0);
  CHECK(w.transmit(w.attacker_ip(), dev, Transport::UDP, 5683, benign_coap(4)).kind ==
        OutcomeKind::Delivered);
}

TEST_CASE("netsim: broker fan-out, retained values, and telemetry routing") {
  World w = make_world(Protocol::MQTT, TopologyKind::T1FlatStar);
  // Seeded registration: the command topic is discoverable before any traffic.
  REQUIRE(w.retained().count("cmd/dev1") == 1);

  w.advance(11000.0);
  int telemetry = 0;
  for (const BrokerMessage& m : w.broker_log()) {
    if (m.topic == "telemetry/dev1") ++telemetry;
  }
  CHECK(telemetry == 2);  // 5s and 10s
  CHECK(w.retained().count("telemetry/dev1") == 1);

  mqtt::Packet pub;
  pub.kind = mqtt::PacketKind::Publish;
  pub.topic = "cmd/dev1";
  std::string body = "shutdown";
  pub.payload = Bytes(body.begin(), body.end());
  auto out = w.transmit(w.attacker_ip(), "192.168.100.30", Transport::TCP, 1883,
                        mqtt::encode(pub).value());
  CHECK(out.kind == OutcomeKind::Delivered);
  CHECK(out.target_silenced);
  w.advance(15000.0);
  int after = 0;
  for (const BrokerMessage& m : w.broker_log()) {
    if (m.topic == "telemetry/dev1" && m.time_ms > 11000.0) ++after;
  }
  CHECK(after == 0);  // silenced device stops publishing
}

TEST_CASE("netsim: hmi traffic obeys a seeded poisson process") {
  World w = make_world(Protocol::CoAP, TopologyKind::T1FlatStar, ImpairmentProfile::heavy(), 11);
  int frames = 0;
  for (int i = 0; i < 1000; ++i) {
    w.advance(1000.0);
    frames += static_cast<int>(w.hmi_step(1.0).size());
  }
  // Mean 2/s over 1000 s; a 5-sigma band is ~±224.
  CHECK(frames > 1750);
  CHECK(frames < 2250);

  World quiet = make_world(Protocol::CoAP, TopologyKind::T1FlatStar, ImpairmentProfile::none(), 11);
  CHECK(quiet.hmi_step(1.0).empty());
}

TEST_CASE("netsim: stealth window counts only recent attacker frames") {
  World w = make_world(Protocol::CoAP, TopologyKind::T1FlatStar);
  w.transmit(w.attacker_ip(), "192.168.100.10", Transport::UDP, 5683, benign_coap(1));
  w.transmit(w.attacker_ip(), "192.168.100.10", Transport::UDP, 5683, benign_coap(2));
  CHECK(w.attacker_frames_in_window(60.0) == 2);
  w.advance(120000.0);
  CHECK(w.attacker_frames_in_window(60.0) == 0);
}

TEST_CASE("netsim: identical seeds give identical delivery streams") {
  auto run = [](uint64_t seed) {
    World w = make_world(Protocol::CoAP, TopologyKind::T1FlatStar, ImpairmentProfile::heavy(),
                         seed);
    std::string sig;
    for (int i = 0; i < 200; ++i) {
      auto out = w.transmit(w.attacker_ip(), "192.168.100.10", Transport::UDP, 5683,
                            benign_coap(static_cast<uint16_t>(i)));
      sig += std::to_string(static_cast<int>(out.kind));
      sig += ":" + std::to_string(out.rtt_ms) + ";";
    }
    return sig;
  };
  CHECK(run(5) == run(5));
  CHECK(run(5) != run(6));
}
