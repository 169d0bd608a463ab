#include "apiot/netsim.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

#include "apiot/coap.hpp"
#include "apiot/modbus.hpp"

namespace apiot {

const char* to_string(TopologyKind k) {
  switch (k) {
    case TopologyKind::T1FlatStar: return "t1";
    case TopologyKind::T2PurdueSegmented: return "t2";
    case TopologyKind::T3EdgeFogCloud: return "t3";
    case TopologyKind::Mesh15: return "mesh15";
  }
  return "unknown";
}

std::optional<TopologyKind> topology_from_string(const std::string& s) {
  if (s == "t1" || s == "T1") return TopologyKind::T1FlatStar;
  if (s == "t2" || s == "T2") return TopologyKind::T2PurdueSegmented;
  if (s == "t3" || s == "T3") return TopologyKind::T3EdgeFogCloud;
  if (s == "mesh15" || s == "mesh") return TopologyKind::Mesh15;
  return std::nullopt;
}

const char* to_string(OutcomeKind k) {
  switch (k) {
    case OutcomeKind::Delivered: return "delivered";
    case OutcomeKind::Dropped: return "dropped";
    case OutcomeKind::Refused: return "refused";
    case OutcomeKind::BlockedTimeout: return "blocked_timeout";
    case OutcomeKind::Timeout: return "timeout";
  }
  return "unknown";
}

const char* to_string(BuildError e) {
  switch (e) {
    case BuildError::MissingGateway: return "missing gateway";
    case BuildError::DuplicateIp: return "duplicate ip";
    case BuildError::SubnetMismatch: return "ip outside segment subnet";
    case BuildError::BadRoster: return "roster inconsistent with topology";
    case BuildError::SpawnFailed: return "device spawn failed";
  }
  return "unknown";
}

bool ip_in_subnet(const std::string& ip, const std::string& subnet) {
  auto slash = subnet.find('/');
  std::string prefix = subnet.substr(0, slash);
  // /24 networks only at desk scale: compare the first three octets.
  auto last_dot_ip = ip.rfind('.');
  auto last_dot_net = prefix.rfind('.');
  if (last_dot_ip == std::string::npos || last_dot_net == std::string::npos) return false;
  return ip.substr(0, last_dot_ip) == prefix.substr(0, last_dot_net);
}

namespace {

std::optional<Protocol> protocol_of_port(uint16_t port) {
  if (port == 5683) return Protocol::CoAP;
  if (port == 502) return Protocol::Modbus;
  if (port == 1883) return Protocol::MQTT;
  return std::nullopt;
}

std::string rule_key(const DefensiveRule& r) {
  std::ostringstream os;
  os << r.installed_at << '|';
  if (auto* d = std::get_if<IptablesDrop>(&r.kind)) {
    os << "drop|" << (d->transport == Transport::TCP ? "tcp" : "udp") << '|' << d->port << '|'
       << d->dst_ip;
  } else if (auto* f = std::get_if<ModbusFcFilter>(&r.kind)) {
    os << "fcfilter|" << f->dst_ip << '|';
    for (uint8_t fc : f->blocked_fcs) os << int(fc) << ',';
  } else if (auto* c = std::get_if<CoapRateLimit>(&r.kind)) {
    os << "ratelimit|" << c->dst_ip << '|' << c->max_per_s;
  } else if (auto* p = std::get_if<ProtocolBlock>(&r.kind)) {
    os << "protoblock|" << p->dst_ip << '|' << to_string(p->protocol);
  }
  return os.str();
}

}  // namespace

Device* World::device(const std::string& ip) {
  auto it = devices_.find(ip);
  return it == devices_.end() ? nullptr : &it->second;
}

const Device* World::device(const std::string& ip) const {
  auto it = devices_.find(ip);
  return it == devices_.end() ? nullptr : &it->second;
}

std::vector<const Device*> World::devices() const {
  std::vector<const Device*> out;
  for (const auto& [ip, d] : devices_) out.push_back(&d);
  return out;
}

std::string World::segment_of_ip(const std::string& ip) const {
  if (ip == attacker_ip_) return attacker_segment_;
  if (const Device* d = device(ip)) return d->spec().segment;
  return {};
}

std::optional<std::vector<std::string>> World::route_gateways(const std::string& src_seg,
                                                              const std::string& dst_seg) const {
  if (src_seg.empty() || dst_seg.empty()) return std::nullopt;
  if (src_seg == dst_seg) return std::vector<std::string>{};

  // BFS over segment links; a crashed gateway does not forward.
  std::map<std::string, std::pair<std::string, std::string>> prev;  // seg -> (prev seg, gw)
  std::deque<std::string> queue{src_seg};
  std::set<std::string> seen{src_seg};
  while (!queue.empty()) {
    std::string seg = queue.front();
    queue.pop_front();
    for (const Link& link : links_) {
      std::string other;
      if (link.seg_a == seg) other = link.seg_b;
      else if (link.seg_b == seg) other = link.seg_a;
      else continue;
      const Device* gw = nullptr;
      for (const auto& [ip, d] : devices_) {
        if (d.spec().device_id == link.gateway_id) { gw = &d; break; }
      }
      if (!gw || gw->crashed()) continue;
      if (seen.count(other)) continue;
      seen.insert(other);
      prev[other] = {seg, link.gateway_id};
      if (other == dst_seg) {
        std::vector<std::string> gws;
        std::string cur = dst_seg;
        while (cur != src_seg) {
          gws.push_back(prev[cur].second);
          cur = prev[cur].first;
        }
        std::reverse(gws.begin(), gws.end());
        return gws;
      }
      queue.push_back(other);
    }
  }
  return std::nullopt;
}

void World::record_frame(const std::string& src_ip) {
  frame_log_.push_back({clock_ms_, src_ip});
}

bool World::rule_applies(const DefensiveRule& rule, const std::string& src_ip,
                         const std::string& dst_ip, Transport transport, uint16_t port,
                         const Bytes& frame, const std::vector<std::string>& path_gateways) {
  bool on_path = std::find(path_gateways.begin(), path_gateways.end(), rule.installed_at) !=
                 path_gateways.end();
  if (!on_path && rule.installed_at != segment_of_ip(dst_ip)) return false;

  if (auto* d = std::get_if<IptablesDrop>(&rule.kind)) {
    return d->dst_ip == dst_ip && d->transport == transport && d->port == port;
  }
  if (auto* f = std::get_if<ModbusFcFilter>(&rule.kind)) {
    if (f->dst_ip != dst_ip || port != 502) return false;
    auto adu = modbus::decode(frame);
    return adu.ok() && adu.value().function_code &&
           f->blocked_fcs.count(*adu.value().function_code) > 0;
  }
  if (auto* c = std::get_if<CoapRateLimit>(&rule.kind)) {
    if (c->dst_ip != dst_ip || transport != Transport::UDP || port != 5683) return false;
    auto& bucket =
        buckets_.try_emplace({rule.rule_id, src_ip}, c->max_per_s, clock_ms_).first->second;
    double elapsed_s = (clock_ms_ - bucket.second) / 1000.0;
    bucket.first = std::min(c->max_per_s, bucket.first + elapsed_s * c->max_per_s);
    bucket.second = clock_ms_;
    if (bucket.first >= 1.0) {
      bucket.first -= 1.0;
      return false;  // within budget
    }
    return true;  // excess frames are dropped, not queued
  }
  if (auto* p = std::get_if<ProtocolBlock>(&rule.kind)) {
    auto proto = protocol_of_port(port);
    return p->dst_ip == dst_ip && proto && *proto == p->protocol;
  }
  return false;
}

DeliveryOutcome World::transmit(const std::string& src_ip, const std::string& dst_ip,
                                Transport transport, uint16_t port, const Bytes& frame) {
  record_frame(src_ip);
  bool udp = transport == Transport::UDP;
  auto silent = [&](OutcomeKind tcp_kind) {
    return DeliveryOutcome{udp ? OutcomeKind::Dropped : tcp_kind, std::nullopt, 0.0};
  };

  Device* dst = device(dst_ip);
  std::string src_seg = segment_of_ip(src_ip);
  std::string dst_seg = dst ? dst->spec().segment : "";
  if (!dst || src_seg.empty()) return silent(OutcomeKind::Timeout);

  auto gateways = route_gateways(src_seg, dst_seg);
  if (!gateways) return silent(OutcomeKind::Timeout);
  size_t hops = gateways->size() + 1;

  double delay = impairment_.latency_ms;
  if (impairment_.jitter_ms > 0) delay += rng_.uniform(-impairment_.jitter_ms, impairment_.jitter_ms);
  if (delay < 0) delay = 0;
  clock_ms_ += delay;
  double rtt = 2 * delay;

  for (const DefensiveRule& rule : rules_) {
    if (rule_applies(rule, src_ip, dst_ip, transport, port, frame, *gateways)) {
      return silent(OutcomeKind::BlockedTimeout);
    }
  }

  if (udp) {
    for (size_t h = 0; h < hops; ++h) {
      if (rng_.bernoulli(impairment_.loss_prob)) return {OutcomeKind::Dropped, std::nullopt, 0.0};
    }
  }

  dst->recover_if_due(clock_ms_);
  if (dst->crashed()) return silent(OutcomeKind::Refused);
  if (!dst->listens_on(transport, port)) return silent(OutcomeKind::Refused);

  DeliveryEffect eff = dst->deliver(frame, transport, port, clock_ms_);
  DeliveryOutcome out{OutcomeKind::Delivered, std::nullopt, rtt};
  out.target_crashed = eff.crashed;
  if (eff.broker_publish && eff.broker_publish->topic) {
    bool silenced = false;
    Bytes payload = eff.broker_publish->payload.value_or(Bytes{});
    broker_accept_publish(dst_ip, *eff.broker_publish->topic, payload, &silenced);
    out.target_silenced = silenced;
  }
  if (eff.response) {
    clock_ms_ += delay;  // return path
    out.response = eff.response;
  }
  return out;
}

DeliveryOutcome World::probe(const std::string& src_ip, const std::string& dst_ip,
                             Transport transport, uint16_t port) {
  bool udp = transport == Transport::UDP;
  auto silent = [&](OutcomeKind tcp_kind) {
    return DeliveryOutcome{udp ? OutcomeKind::Dropped : tcp_kind, std::nullopt, 0.0};
  };
  record_frame(src_ip);

  Device* dst = device(dst_ip);
  std::string src_seg = segment_of_ip(src_ip);
  if (!dst || src_seg.empty()) return silent(OutcomeKind::Timeout);
  auto gateways = route_gateways(src_seg, dst->spec().segment);
  if (!gateways) return silent(OutcomeKind::Timeout);

  for (const DefensiveRule& rule : rules_) {
    if (rule_applies(rule, src_ip, dst_ip, transport, port, Bytes{}, *gateways)) {
      return silent(OutcomeKind::BlockedTimeout);
    }
  }
  if (udp) {
    for (size_t h = 0; h < gateways->size() + 1; ++h) {
      if (rng_.bernoulli(impairment_.loss_prob)) return {OutcomeKind::Dropped, std::nullopt, 0.0};
    }
  }
  dst->recover_if_due(clock_ms_);
  if (dst->crashed()) return silent(OutcomeKind::Refused);
  if (!dst->listens_on(transport, port)) return silent(OutcomeKind::Refused);
  Bytes ok{1};
  return {OutcomeKind::Delivered, ok, 2 * impairment_.latency_ms};
}

Expected<uint64_t, RuleError> World::install_rule(DefensiveRule rule) {
  if (auto* c = std::get_if<CoapRateLimit>(&rule.kind)) {
    if (c->max_per_s <= 0) return RuleError::MalformedRule;
  }
  if (rule.installed_at.empty()) return RuleError::NoInstallPoint;
  bool point_exists = segments_.count(rule.installed_at) > 0;
  for (const Link& l : links_) {
    if (l.gateway_id == rule.installed_at) point_exists = true;
  }
  if (!point_exists) return RuleError::NoInstallPoint;

  std::string key = rule_key(rule);
  for (const DefensiveRule& existing : rules_) {
    if (rule_key(existing) == key) return existing.rule_id;  // idempotent
  }
  rule.rule_id = next_rule_id_++;
  rules_.push_back(rule);
  return rules_.back().rule_id;
}

std::optional<std::string> World::default_install_point(const std::string& dst_ip) const {
  const Device* dst = device(dst_ip);
  if (!dst) return std::nullopt;
  auto gws = route_gateways(attacker_segment_, dst->spec().segment);
  if (gws && !gws->empty()) return gws->back();
  return dst->spec().segment;
}

std::vector<HmiFrame> World::hmi_step(double dt_s) {
  std::vector<HmiFrame> injected;
  if (!impairment_.hmi_traffic || hmi_ip_.empty()) return injected;

  std::vector<std::string> targets;
  for (const auto& [ip, d] : devices_) {
    if (d.spec().cls == DeviceClass::CoapMcu || d.spec().cls == DeviceClass::ModbusMcu) {
      targets.push_back(ip);
    }
  }
  if (targets.empty()) return injected;

  int count = rng_.poisson(hmi_rate_per_s * dt_s);
  for (int i = 0; i < count; ++i) {
    const std::string& dst = targets[rng_.below(targets.size())];
    const Device* d = device(dst);
    if (d->spec().cls == DeviceClass::CoapMcu) {
      coap::Message poll;
      poll.type = coap::MsgType::Con;
      poll.code = coap::kCodeGet;
      poll.message_id = static_cast<uint16_t>(rng_.next_u64());
      poll.options = coap::uri_path_options("/sensor");
      Bytes frame = coap::encode(poll).value();
      transmit(hmi_ip_, dst, Transport::UDP, 5683, frame);
      injected.push_back({dst, std::move(frame)});
    } else {
      modbus::Adu poll;
      poll.transaction_id = static_cast<uint16_t>(rng_.next_u64());
      poll.unit_id = 1;
      poll.function_code = modbus::kFcReadHolding;
      put_u16(poll.data, 0);
      put_u16(poll.data, 2);
      Bytes frame = modbus::encode(poll).value();
      transmit(hmi_ip_, dst, Transport::TCP, 502, frame);
      injected.push_back({dst, std::move(frame)});
    }
  }
  return injected;
}

void World::broker_accept_publish(const std::string& broker_ip, const std::string& topic,
                                  const Bytes& payload, bool* silenced_someone) {
  retained_[topic] = payload;
  broker_log_.push_back({clock_ms_, broker_ip, topic, payload});
  for (auto& [ip, d] : devices_) {
    if (d.spec().cls != DeviceClass::MqttMcu || d.spec().broker_ip != broker_ip) continue;
    DeliveryEffect eff = d.deliver_mqtt(topic, payload, clock_ms_);
    if (eff.silenced && silenced_someone) *silenced_someone = true;
  }
}

void World::advance(double dt_ms) {
  clock_ms_ += dt_ms;
  std::vector<TelemetryEvent> events;
  for (auto& [ip, d] : devices_) {
    auto evs = d.tick(clock_ms_);
    events.insert(events.end(), evs.begin(), evs.end());
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const TelemetryEvent& a, const TelemetryEvent& b) { return a.time_ms < b.time_ms; });
  for (const TelemetryEvent& ev : events) {
    retained_[ev.topic] = ev.payload;
    broker_log_.push_back({ev.time_ms, ev.broker_ip, ev.topic, ev.payload});
  }
}

bool World::reachable_from_attacker(const std::string& dst_ip) const {
  const Device* d = device(dst_ip);
  if (!d) return false;
  return route_gateways(attacker_segment_, d->spec().segment).has_value();
}

int World::attacker_frames_in_window(double window_s) const {
  double cutoff = clock_ms_ - window_s * 1000.0;
  int count = 0;
  for (const FrameObservation& obs : frame_log_) {
    if (obs.src_ip == attacker_ip_ && obs.time_ms >= cutoff) ++count;
  }
  return count;
}

std::vector<std::string> World::crashed_ips() const {
  std::vector<std::string> out;
  for (const auto& [ip, d] : devices_) {
    if (d.crashed()) out.push_back(ip);
  }
  return out;
}

Expected<World, BuildError> build_topology(TopologyKind kind,
                                           const std::vector<DeviceSpec>& roster,
                                           const ImpairmentProfile& impairment, uint64_t seed) {
  World w;
  w.kind_ = kind;
  w.impairment_ = impairment;
  w.rng_ = Rng(seed);
  w.attacker_ip_ = "192.168.100.99";

  std::vector<std::string> gateway_ids;
  for (const DeviceSpec& s : roster) {
    if (s.cls == DeviceClass::Gateway) gateway_ids.push_back(s.device_id);
  }

  switch (kind) {
    case TopologyKind::T1FlatStar:
      w.segments_["br0"] = {"br0", "192.168.100.0/24"};
      w.attacker_segment_ = "br0";
      break;
    case TopologyKind::T2PurdueSegmented:
      if (gateway_ids.empty()) return BuildError::MissingGateway;
      w.segments_["br0"] = {"br0", "192.168.100.0/24"};
      w.segments_["br_internal"] = {"br_internal", "192.168.200.0/24"};
      w.links_.push_back({"br0", "br_internal", gateway_ids[0]});
      w.attacker_segment_ = "br0";
      break;
    case TopologyKind::T3EdgeFogCloud:
      if (gateway_ids.size() < 2) return BuildError::MissingGateway;
      w.segments_["br0"] = {"br0", "192.168.100.0/24"};
      w.segments_["br_fog"] = {"br_fog", "192.168.200.0/24"};
      w.segments_["br_cell"] = {"br_cell", "192.168.210.0/24"};
      w.links_.push_back({"br0", "br_fog", gateway_ids[0]});
      w.links_.push_back({"br_fog", "br_cell", gateway_ids[1]});
      w.attacker_segment_ = "br0";
      break;
    case TopologyKind::Mesh15:
      if (roster.size() + 1 != 15) return BuildError::BadRoster;  // attacker is node 15
      w.segments_["mesh"] = {"mesh", "192.168.100.0/24"};
      w.attacker_segment_ = "mesh";
      break;
  }

  auto place = [&](DeviceSpec spec) -> std::optional<BuildError> {
    if (spec.segment.empty()) spec.segment = w.attacker_segment_;
    auto seg = w.segments_.find(spec.segment);
    if (seg == w.segments_.end()) return BuildError::BadRoster;
    if (!ip_in_subnet(spec.ip, seg->second.subnet)) return BuildError::SubnetMismatch;
    if (spec.ip == w.attacker_ip_ || w.devices_.count(spec.ip)) return BuildError::DuplicateIp;
    auto dev = Device::spawn(std::move(spec));
    if (!dev.ok()) return BuildError::SpawnFailed;
    std::string ip = dev.value().spec().ip;
    w.devices_.emplace(ip, std::move(dev.value()));
    return std::nullopt;
  };

  for (const DeviceSpec& s : roster) {
    if (auto err = place(s)) return *err;
  }

  if (impairment.hmi_traffic) {
    for (const auto& [ip, d] : w.devices_) {
      if (d.spec().cls == DeviceClass::HmiStation) w.hmi_ip_ = ip;
    }
    if (w.hmi_ip_.empty()) {
      DeviceSpec hmi;
      hmi.device_id = "hmi-1";
      hmi.cls = DeviceClass::HmiStation;
      hmi.ip = "192.168.100.50";
      hmi.segment = w.attacker_segment_;
      if (auto err = place(hmi)) return *err;
      w.hmi_ip_ = hmi.ip;
    }
  }

  // Seed retained command-topic registrations so subscription discovers them.
  for (const auto& [ip, d] : w.devices_) {
    if (d.spec().cls == DeviceClass::MqttMcu && d.spec().vuln.mqtt_command_topic) {
      std::string ready = "ready";
      w.retained_[*d.spec().vuln.mqtt_command_topic] = Bytes(ready.begin(), ready.end());
    }
  }
  return w;
}

std::vector<DeviceSpec> default_roster(Protocol protocol, TopologyKind kind) {
  std::vector<DeviceSpec> roster;
  bool t2 = kind == TopologyKind::T2PurdueSegmented;
  bool t3 = kind == TopologyKind::T3EdgeFogCloud;
  std::string edge_seg = kind == TopologyKind::Mesh15 ? "mesh" : "br0";
  std::string ot_seg = t2 ? "br_internal" : t3 ? "br_cell" : edge_seg;
  std::string ot_net = t2 ? "192.168.200." : t3 ? "192.168.210." : "192.168.100.";

  if (t2) {
    DeviceSpec gw;
    gw.device_id = "gw-1";
    gw.cls = DeviceClass::Gateway;
    gw.ip = "192.168.100.1";
    gw.segment = "br0";
    roster.push_back(gw);
  } else if (t3) {
    DeviceSpec gw1;
    gw1.device_id = "gw-1";
    gw1.cls = DeviceClass::Gateway;
    gw1.ip = "192.168.100.1";
    gw1.segment = "br0";
    roster.push_back(gw1);
    DeviceSpec gw2;
    gw2.device_id = "gw-2";
    gw2.cls = DeviceClass::Gateway;
    gw2.ip = "192.168.200.1";
    gw2.segment = "br_fog";
    roster.push_back(gw2);
  }

  switch (protocol) {
    case Protocol::CoAP: {
      DeviceSpec mcu;
      mcu.device_id = "dev-coap";
      mcu.cls = DeviceClass::CoapMcu;
      mcu.ip = ot_net + "10";
      mcu.segment = ot_seg;
      mcu.vuln.triggers = {VulnClass::CoapOptionOverflow};
      roster.push_back(mcu);
      break;
    }
    case Protocol::Modbus: {
      DeviceSpec mcu;
      mcu.device_id = "dev-modbus";
      mcu.cls = DeviceClass::ModbusMcu;
      mcu.ip = ot_net + "10";
      mcu.segment = ot_seg;
      mcu.vuln.triggers = {VulnClass::ModbusLengthOverflow};
      roster.push_back(mcu);
      break;
    }
    case Protocol::MQTT: {
      std::string broker_ip = t3 ? "192.168.200.30" : (t2 ? "192.168.200.30" : "192.168.100.30");
      DeviceSpec broker;
      broker.device_id = "broker-1";
      broker.cls = DeviceClass::Broker;
      broker.ip = broker_ip;
      broker.segment = t3 ? "br_fog" : (t2 ? "br_internal" : edge_seg);
      roster.push_back(broker);

      DeviceSpec mcu;
      mcu.device_id = "dev1";
      mcu.cls = DeviceClass::MqttMcu;
      mcu.ip = ot_net + "11";
      mcu.segment = ot_seg;
      mcu.vuln.triggers = {VulnClass::MqttShutdownCommand};
      mcu.vuln.mqtt_command_topic = "cmd/dev1";
      mcu.telemetry_topic = "telemetry/dev1";
      mcu.broker_ip = broker_ip;
      roster.push_back(mcu);
      break;
    }
  }

  DeviceSpec echo;
  echo.device_id = "echo-1";
  echo.cls = DeviceClass::EchoMcu;
  echo.ip = "192.168.100.20";
  echo.segment = edge_seg;
  roster.push_back(echo);

  if (kind == TopologyKind::Mesh15) {
    int idx = 0;
    while (roster.size() < 14) {
      DeviceSpec pad;
      pad.device_id = "node-" + std::to_string(++idx);
      pad.cls = DeviceClass::EchoMcu;
      pad.ip = "192.168.100." + std::to_string(100 + idx);
      pad.segment = "mesh";
      roster.push_back(pad);
    }
  }
  return roster;
}

}  // namespace apiot
