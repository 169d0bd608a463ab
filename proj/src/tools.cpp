#include "apiot/tools.hpp"

#include <algorithm>
#include <set>

#include "apiot/coap.hpp"
#include "apiot/modbus.hpp"
#include "apiot/mqtt.hpp"

namespace apiot {

namespace {

const std::set<std::string> kRecon = {"get_network_state", "get_actionable_targets",
                                      "stealth_check", "inspect_lab"};
const std::set<std::string> kRed = {"coap_send", "modbus_request", "tcp_send", "udp_send",
                                    "mqtt_publish", "mqtt_subscribe", "verify_crash",
                                    "verify_shell"};
const std::set<std::string> kBlue = {"iptables_rule", "modbus_fc_filter", "coap_rate_limit",
                                     "verify_patch", "list_patches", "protocol_block"};
const std::set<std::string> kOffensive = {"coap_send", "modbus_request", "tcp_send", "udp_send",
                                          "mqtt_publish"};
const std::set<std::string> kUnsupported = {"run_command", "remote_exec", "create_tool",
                                            "verify_shell"};

Protocol protocol_for_vuln(VulnClass v) {
  switch (v) {
    case VulnClass::CoapOptionOverflow: return Protocol::CoAP;
    case VulnClass::ModbusLengthOverflow: return Protocol::Modbus;
    case VulnClass::MqttShutdownCommand: return Protocol::MQTT;
  }
  return Protocol::CoAP;
}

std::optional<Protocol> protocol_of_port(uint16_t port) {
  if (port == 5683) return Protocol::CoAP;
  if (port == 502) return Protocol::Modbus;
  if (port == 1883) return Protocol::MQTT;
  return std::nullopt;
}

void note_response(MissionState& mission, const std::string& ip) {
  mission.responsive_ips.insert(ip);
  mission.believed_crashed.erase(ip);
}

ToolResult from_outcome(MissionState& mission, const std::string& dst_ip,
                        const DeliveryOutcome& outcome) {
  ToolResult r;
  r.duration_ms = outcome.rtt_ms;
  switch (outcome.kind) {
    case OutcomeKind::Delivered:
      if (outcome.response) {
        note_response(mission, dst_ip);
        r.status = ToolStatus::Ok;
        r.observation["response_hex"] = to_hex(*outcome.response);
      } else {
        r.status = ToolStatus::NoResponse;
        r.message = "no response";
      }
      break;
    case OutcomeKind::Dropped:
      r.status = ToolStatus::NoResponse;
      r.message = "no response";
      break;
    case OutcomeKind::Timeout:
      r.status = ToolStatus::NoResponse;
      r.message = "connection timed out";
      break;
    case OutcomeKind::Refused:
      r.status = ToolStatus::Error;
      r.message = "connection refused";
      break;
    case OutcomeKind::BlockedTimeout:
      r.status = ToolStatus::Blocked;
      r.message = "connection timed out (filtered)";
      r.observation["blocked_by"] = "network filter";
      break;
  }
  r.exploit_succeeded = outcome.target_crashed || outcome.target_silenced;
  return r;
}

// Records (or refreshes) an unconfirmed finding for a crash-capable frame.
void record_finding(MissionState& mission, const ToolCall& call, const std::string& target_ip,
                    VulnClass vuln, const Bytes& frame, const std::string& wire_dst,
                    Transport transport, uint16_t port, double now_ms) {
  Finding* f = mission.finding_for(target_ip, vuln);
  if (!f) {
    Finding nf;
    nf.finding_id = mission.next_finding_id++;
    nf.target_ip = target_ip;
    nf.vuln = vuln;
    mission.findings.push_back(nf);
    f = &mission.findings.back();
  }
  if (!f->confirmed) {
    f->exploit_frame = frame;
    f->wire_dst_ip = wire_dst;
    f->wire_transport = transport;
    f->wire_port = port;
    f->exploit_turn = call.turn;
    f->exploit_time_ms = now_ms;
  }
  mission.attempted_ips.insert(target_ip);
}

ToolResult tool_get_network_state(World& world, MissionState& mission, const ToolCall& call) {
  ToolResult r;
  nlohmann::json devices = nlohmann::json::array();
  for (const Device* d : world.devices()) {
    nlohmann::json ports = nlohmann::json::array();
    for (const PortSpec& p : d->spec().listen_ports) {
      ports.push_back({{"transport", p.transport == Transport::TCP ? "tcp" : "udp"},
                       {"port", p.port}});
    }
    std::string hint = "mcu";
    switch (d->spec().cls) {
      case DeviceClass::Gateway: hint = "gateway"; break;
      case DeviceClass::Broker: hint = "broker"; break;
      case DeviceClass::HmiStation: hint = "hmi"; break;
      default: break;  // lifecycle is deliberately not exposed; the agent must probe
    }
    devices.push_back({{"ip", d->spec().ip},
                       {"class_hint", hint},
                       {"open_ports", ports},
                       {"reachable", world.reachable_from_attacker(d->spec().ip)}});
  }
  r.observation["devices"] = devices;
  return r;
}

ToolResult tool_get_actionable_targets(World& world, MissionState& mission, const ToolCall&) {
  ToolResult r;
  nlohmann::json targets = nlohmann::json::array();
  for (const Device* d : world.devices()) {
    switch (d->spec().cls) {
      case DeviceClass::Gateway:
      case DeviceClass::Broker:
      case DeviceClass::HmiStation:
        continue;
      default:
        break;
    }
    const std::string& ip = d->spec().ip;
    if (mission.believed_crashed.count(ip)) continue;
    bool fully_patched = false;
    for (const Finding& f : mission.findings) {
      if (f.target_ip != ip || !f.confirmed) continue;
      for (const Patch& p : mission.patches) {
        if (p.finding_id == f.finding_id && p.verified) fully_patched = true;
      }
    }
    if (fully_patched) continue;
    targets.push_back({{"ip", ip}, {"attempted", mission.attempted_ips.count(ip) > 0}});
  }
  r.observation["targets"] = targets;
  return r;
}

ToolResult tool_stealth_check(World& world, MissionState&, const ToolCall& call) {
  ToolResult r;
  double window_s = call.args.value("window_s", 60.0);
  r.observation["window_s"] = window_s;
  r.observation["attacker_frames"] = world.attacker_frames_in_window(window_s);
  return r;
}

ToolResult tool_inspect_lab(World& world, MissionState&, const ToolCall&) {
  ToolResult r;
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& [id, seg] : world.segments()) {
    segs.push_back({{"id", seg.id}, {"subnet", seg.subnet}});
  }
  nlohmann::json links = nlohmann::json::array();
  for (const Link& l : world.links()) {
    links.push_back({{"segments", {l.seg_a, l.seg_b}}, {"gateway", l.gateway_id}});
  }
  r.observation["topology"] = to_string(world.kind());
  r.observation["segments"] = segs;
  r.observation["links"] = links;
  return r;
}

ToolResult tool_coap_send(World& world, MissionState& mission, const ToolCall& call) {
  coap::Message msg;
  std::string method = call.args.value("method", "get");
  msg.code = method == "post" ? coap::kCodePost : coap::kCodeGet;
  msg.type = call.args.value("confirmable", true) ? coap::MsgType::Con : coap::MsgType::Non;
  msg.message_id = static_cast<uint16_t>(call.args.value("message_id", 1));
  if (call.args.contains("path")) {
    msg.options = coap::uri_path_options(call.args["path"].get<std::string>());
  }
  if (call.args.contains("payload")) {
    std::string p = call.args["payload"].get<std::string>();
    msg.payload = Bytes(p.begin(), p.end());
  }
  if (call.args.contains("token")) {
    auto tok = from_hex(call.args["token"].get<std::string>());
    if (!tok) return {ToolStatus::Error, {}, "token is not valid hex"};
    msg.token = *tok;
  }
  std::optional<coap::RawOptionOverride> override_opts;
  if (call.args.contains("raw_options")) {
    auto raw = from_hex(call.args["raw_options"].get<std::string>());
    if (!raw) return {ToolStatus::Error, {}, "raw_options is not valid hex"};
    override_opts = coap::RawOptionOverride{*raw};
  }
  auto encoded = coap::encode(msg, override_opts);
  if (!encoded.ok()) return {ToolStatus::Error, {}, "encode failed"};

  uint16_t port = static_cast<uint16_t>(call.args.value("port", 5683));
  mission.attempted_ips.insert(call.target_ip);
  bool crash_capable = false;
  if (const Device* d = world.device(call.target_ip)) {
    if (classify_trigger(encoded.value(), Protocol::CoAP, d->spec().vuln)) {
      crash_capable = true;
      record_finding(mission, call, call.target_ip, VulnClass::CoapOptionOverflow,
                     encoded.value(), call.target_ip, Transport::UDP, port, world.now_ms());
    }
  }
  auto outcome = world.transmit(world.attacker_ip(), call.target_ip, Transport::UDP, port,
                                encoded.value());
  ToolResult r = from_outcome(mission, call.target_ip, outcome);
  if (r.status == ToolStatus::Ok && outcome.response) {
    auto resp = coap::decode(*outcome.response);
    if (resp.ok()) {
      r.observation["code"] = resp.value().code;
      std::string body(resp.value().payload.begin(), resp.value().payload.end());
      r.observation["payload"] = body;
    }
  }
  r.crash_capable_frame = crash_capable;
  r.protocol_used = Protocol::CoAP;
  return r;
}

ToolResult tool_modbus_request(World& world, MissionState& mission, const ToolCall& call) {
  modbus::Adu adu;
  adu.transaction_id = static_cast<uint16_t>(call.args.value("transaction_id", 1));
  adu.unit_id = static_cast<uint8_t>(call.args.value("unit_id", 1));
  if (call.args.contains("function_code")) {
    adu.function_code = static_cast<uint8_t>(call.args["function_code"].get<int>());
  }
  if (call.args.contains("data")) {
    auto data = from_hex(call.args["data"].get<std::string>());
    if (!data) return {ToolStatus::Error, {}, "data is not valid hex"};
    adu.data = *data;
  } else if (call.args.contains("address")) {
    put_u16(adu.data, static_cast<uint16_t>(call.args["address"].get<int>()));
    if (call.args.contains("value")) {
      put_u16(adu.data, static_cast<uint16_t>(call.args["value"].get<int>()));
    } else {
      put_u16(adu.data, static_cast<uint16_t>(call.args.value("count", 1)));
    }
  }
  std::optional<uint16_t> override_len;
  if (call.args.contains("declared_length_override")) {
    override_len = static_cast<uint16_t>(call.args["declared_length_override"].get<int>());
  }
  auto encoded = modbus::encode(adu, override_len);
  if (!encoded.ok()) return {ToolStatus::Error, {}, "encode failed: missing function code"};

  uint16_t port = static_cast<uint16_t>(call.args.value("port", 502));
  mission.attempted_ips.insert(call.target_ip);
  bool crash_capable = false;
  if (const Device* d = world.device(call.target_ip)) {
    if (classify_trigger(encoded.value(), Protocol::Modbus, d->spec().vuln)) {
      crash_capable = true;
      record_finding(mission, call, call.target_ip, VulnClass::ModbusLengthOverflow,
                     encoded.value(), call.target_ip, Transport::TCP, port, world.now_ms());
    }
  }
  auto outcome = world.transmit(world.attacker_ip(), call.target_ip, Transport::TCP, port,
                                encoded.value());
  ToolResult r = from_outcome(mission, call.target_ip, outcome);
  if (outcome.kind == OutcomeKind::Delivered && !outcome.response && outcome.target_crashed) {
    r.message = "connection dropped after send";
  }
  if (r.status == ToolStatus::Ok && outcome.response) {
    auto resp = modbus::decode(*outcome.response);
    if (resp.ok() && resp.value().function_code) {
      r.observation["function_code"] = *resp.value().function_code;
      if (*resp.value().function_code == modbus::kFcReadHolding && !resp.value().data.empty()) {
        nlohmann::json regs = nlohmann::json::array();
        const Bytes& d = resp.value().data;
        for (size_t i = 1; i + 1 < d.size(); i += 2) regs.push_back(get_u16(d, i));
        r.observation["registers"] = regs;
      }
    }
  }
  r.crash_capable_frame = crash_capable;
  r.protocol_used = Protocol::Modbus;
  return r;
}

ToolResult tool_raw_send(World& world, MissionState& mission, const ToolCall& call,
                         Transport transport) {
  auto data = from_hex(call.args.value("data", ""));
  if (!data) return {ToolStatus::Error, {}, "data is not valid hex"};
  uint16_t port = static_cast<uint16_t>(call.args.value("port", 0));
  mission.attempted_ips.insert(call.target_ip);

  bool crash_capable = false;
  std::optional<Protocol> proto = protocol_of_port(port);
  if (const Device* d = world.device(call.target_ip); d && proto) {
    if (auto v = classify_trigger(*data, *proto, d->spec().vuln)) {
      crash_capable = true;
      record_finding(mission, call, call.target_ip, *v, *data, call.target_ip, transport, port,
                     world.now_ms());
    }
  }
  auto outcome = world.transmit(world.attacker_ip(), call.target_ip, transport, port, *data);
  ToolResult r = from_outcome(mission, call.target_ip, outcome);
  r.crash_capable_frame = crash_capable;
  r.protocol_used = proto;
  return r;
}

ToolResult tool_mqtt_publish(World& world, MissionState& mission, const ToolCall& call) {
  mqtt::Packet pkt;
  pkt.kind = mqtt::PacketKind::Publish;
  pkt.topic = call.args.value("topic", "");
  std::string payload = call.args.value("payload", "");
  pkt.payload = Bytes(payload.begin(), payload.end());
  auto encoded = mqtt::encode(pkt);
  if (!encoded.ok()) return {ToolStatus::Error, {}, "encode failed"};

  uint16_t port = static_cast<uint16_t>(call.args.value("port", 1883));
  // A shutdown command on a command topic is the MQTT attack chain's payload:
  // record the finding against the subscribed MCU, keyed to the broker wire.
  bool crash_capable = false;
  for (const Device* d : world.devices()) {
    if (d->spec().cls != DeviceClass::MqttMcu || d->spec().broker_ip != call.target_ip) continue;
    if (classify_trigger(encoded.value(), Protocol::MQTT, d->spec().vuln)) {
      crash_capable = true;
      record_finding(mission, call, d->spec().ip, VulnClass::MqttShutdownCommand, encoded.value(),
                     call.target_ip, Transport::TCP, port, world.now_ms());
    }
  }
  auto outcome = world.transmit(world.attacker_ip(), call.target_ip, Transport::TCP, port,
                                encoded.value());
  ToolResult r = from_outcome(mission, call.target_ip, outcome);
  if (outcome.kind == OutcomeKind::Delivered) {
    note_response(mission, call.target_ip);
    r.status = ToolStatus::Ok;  // qos 0: accepted without a reply packet
    r.observation["published"] = true;
  }
  r.crash_capable_frame = crash_capable;
  r.protocol_used = Protocol::MQTT;
  return r;
}

ToolResult tool_mqtt_subscribe(World& world, MissionState& mission, const ToolCall& call) {
  std::string filter = call.args.value("topic_filter", "#");
  double window_s = call.args.value("listen_window_s", 10.0);

  auto reach = world.probe(world.attacker_ip(), call.target_ip, Transport::TCP, 1883);
  if (reach.kind != OutcomeKind::Delivered) {
    ToolResult r = from_outcome(mission, call.target_ip, reach);
    if (r.status == ToolStatus::Ok) r.status = ToolStatus::NoResponse;
    return r;
  }
  note_response(mission, call.target_ip);

  double t0 = world.now_ms();
  world.advance(window_s * 1000.0);

  ToolResult r;
  nlohmann::json messages = nlohmann::json::array();
  for (const BrokerMessage& m : world.broker_log()) {
    if (m.broker_ip != call.target_ip) continue;
    if (m.time_ms <= t0 || m.time_ms > world.now_ms()) continue;
    if (!mqtt::topic_matches(filter, m.topic)) continue;
    messages.push_back({{"topic", m.topic},
                        {"payload", std::string(m.payload.begin(), m.payload.end())}});
    // Live telemetry marks its emitter as responsive.
    for (const Device* d : world.devices()) {
      if (d->spec().cls == DeviceClass::MqttMcu && d->spec().telemetry_topic == m.topic) {
        note_response(mission, d->spec().ip);
      }
    }
  }
  nlohmann::json retained = nlohmann::json::array();
  for (const auto& [topic, payload] : world.retained()) {
    if (!mqtt::topic_matches(filter, topic)) continue;
    retained.push_back({{"topic", topic},
                        {"payload", std::string(payload.begin(), payload.end())}});
  }
  r.observation["messages"] = messages;
  r.observation["retained"] = retained;
  r.duration_ms = window_s * 1000.0;
  r.protocol_used = Protocol::MQTT;
  return r;
}

ToolResult tool_verify_crash(World& world, MissionState& mission, const ToolCall& call) {
  ToolResult r;
  Device* d = world.device(call.target_ip);
  if (!d) {
    r.observation["crashed"] = false;
    r.message = "unknown target";
    return r;
  }

  bool all_silent = true;
  bool any_response = false;

  if (d->spec().cls == DeviceClass::MqttMcu) {
    // Silence semantics: watch the telemetry topic for two periods.
    double window_ms = 2.0 * d->spec().telemetry_period_s * 1000.0;
    double t0 = world.now_ms();
    world.advance(window_ms);
    for (const BrokerMessage& m : world.broker_log()) {
      if (m.topic == d->spec().telemetry_topic && m.time_ms > t0) {
        any_response = true;
        all_silent = false;
      }
    }
    r.duration_ms = window_ms;
  } else {
    for (const PortSpec& p : d->spec().listen_ports) {
      if (p.transport == Transport::TCP) {
        auto out = world.probe(world.attacker_ip(), call.target_ip, p.transport, p.port);
        if (out.kind == OutcomeKind::Delivered) {
          any_response = true;
          all_silent = false;
        }
      } else {
        // Loss makes single UDP probes ambiguous; require five silent probes.
        for (int i = 0; i < 5; ++i) {
          auto out = world.probe(world.attacker_ip(), call.target_ip, p.transport, p.port);
          if (out.kind == OutcomeKind::Delivered) {
            any_response = true;
            all_silent = false;
            break;
          }
        }
      }
    }
  }

  bool previously_responsive = mission.responsive_ips.count(call.target_ip) > 0;
  bool crashed = all_silent && previously_responsive;
  if (any_response) note_response(mission, call.target_ip);
  if (crashed) {
    mission.believed_crashed.insert(call.target_ip);
    for (Finding& f : mission.findings) {
      if (f.target_ip == call.target_ip && !f.confirmed) {
        f.confirmed = true;
        f.confirmed_turn = call.turn;
      }
    }
  }
  r.observation["crashed"] = crashed;
  r.observation["silent"] = all_silent;
  return r;
}

// Shared body of iptables_rule / modbus_fc_filter / coap_rate_limit /
// protocol_block: install, then bind an unverified Patch to the matching
// confirmed finding.
ToolResult apply_patch_rule(World& world, MissionState& mission, const ToolCall& call,
                            DefensiveRule rule, Protocol rule_protocol) {
  if (rule.installed_at.empty()) {
    auto point = world.default_install_point(call.target_ip);
    if (!point) return {ToolStatus::Error, {}, "no path to target"};
    rule.installed_at = *point;
  }
  auto installed = world.install_rule(rule);
  if (!installed.ok()) return {ToolStatus::Error, {}, "malformed rule"};
  uint64_t rule_id = installed.value();

  Finding* match = nullptr;
  for (Finding& f : mission.findings) {
    if (!f.confirmed) continue;
    if (protocol_for_vuln(f.vuln) != rule_protocol) continue;
    if (f.target_ip == call.target_ip || f.wire_dst_ip == call.target_ip) match = &f;
  }

  for (const Patch& p : mission.patches) {
    if (p.rule_id == rule_id && (!match || p.finding_id == match->finding_id)) {
      ToolResult r;
      r.observation["patch_id"] = p.patch_id;
      r.observation["rule_id"] = rule_id;
      r.observation["verified"] = p.verified;
      return r;
    }
  }

  Patch patch;
  patch.patch_id = mission.next_patch_id++;
  patch.rule_id = rule_id;
  if (match) {
    patch.finding_id = match->finding_id;
  } else {
    patch.orphan = true;
  }
  mission.patches.push_back(patch);

  ToolResult r;
  r.observation["patch_id"] = patch.patch_id;
  r.observation["rule_id"] = rule_id;
  r.observation["verified"] = false;
  if (patch.orphan) {
    r.observation["warning"] = "no matching finding; patch recorded as orphan";
  }
  return r;
}

ToolResult tool_verify_patch(World& world, MissionState& mission, const ToolCall& call) {
  if (!call.args.contains("finding_id")) return {ToolStatus::Error, {}, "finding_id required"};
  Finding* f = mission.finding_by_id(call.args["finding_id"].get<int>());
  if (!f) return {ToolStatus::Error, {}, "unknown finding_id"};

  Device* target = world.device(f->target_ip);
  if (target) {
    target->recover_if_due(world.now_ms());
    if (target->crashed()) return {ToolStatus::Error, {}, "target down"};
  }

  auto outcome = world.transmit(world.attacker_ip(), f->wire_dst_ip, f->wire_transport,
                                f->wire_port, f->exploit_frame);
  bool verified = false;
  if (outcome.kind == OutcomeKind::Dropped || outcome.kind == OutcomeKind::BlockedTimeout) {
    verified = true;
  } else if (outcome.kind == OutcomeKind::Delivered) {
    if (f->vuln == VulnClass::MqttShutdownCommand) {
      verified = false;  // the command still reached the broker
    } else {
      verified = !outcome.target_crashed;
    }
  }

  if (verified) {
    for (Patch& p : mission.patches) {
      if (p.finding_id == f->finding_id && !p.verified) {
        p.verified = true;
        p.verified_turn = call.turn;
        p.verified_time_ms = world.now_ms();
      }
    }
  } else if (outcome.target_crashed) {
    mission.believed_crashed.insert(f->target_ip);
  }

  ToolResult r;
  r.observation["finding_id"] = f->finding_id;
  r.observation["verified"] = verified;
  r.duration_ms = outcome.rtt_ms;
  if (!verified) r.message = "exploit replay still effective";
  return r;
}

ToolResult tool_list_patches(World&, MissionState& mission, const ToolCall&) {
  ToolResult r;
  nlohmann::json patches = nlohmann::json::array();
  for (const Patch& p : mission.patches) {
    patches.push_back({{"patch_id", p.patch_id},
                       {"finding_id", p.finding_id},
                       {"rule_id", p.rule_id},
                       {"verified", p.verified},
                       {"orphan", p.orphan}});
  }
  r.observation["patches"] = patches;
  return r;
}

}  // namespace

bool is_recon_tool(const std::string& name) { return kRecon.count(name) > 0; }
bool is_red_tool(const std::string& name) { return kRed.count(name) > 0; }
bool is_blue_tool(const std::string& name) { return kBlue.count(name) > 0; }
bool is_offensive_tool(const std::string& name) { return kOffensive.count(name) > 0; }
bool is_unsupported_tool(const std::string& name) { return kUnsupported.count(name) > 0; }

std::string ToolCall::args_digest() const {
  // nlohmann::json keeps object keys sorted, so dump() is canonical.
  return fnv1a_hex(tool + "|" + target_ip + "|" + args.dump());
}

const char* to_string(ToolStatus s) {
  switch (s) {
    case ToolStatus::Ok: return "ok";
    case ToolStatus::NoResponse: return "no_response";
    case ToolStatus::Blocked: return "blocked";
    case ToolStatus::Error: return "error";
    case ToolStatus::Unsupported: return "unsupported";
  }
  return "unknown";
}

ToolResult execute_tool(World& world, MissionState& mission, const ToolCall& call) {
  bool known = false;
  for (std::string_view name : kToolRoster) {
    if (name == call.tool) known = true;
  }
  if (!known) return {ToolStatus::Error, {}, "unknown tool: " + call.tool};
  if (is_unsupported_tool(call.tool)) {
    return {ToolStatus::Unsupported, {}, "not available in this lab build"};
  }
  if (is_red_tool(call.tool) && mission.phase != Phase::Red) {
    return {ToolStatus::Error, {}, "phase violation: red tool in blue phase"};
  }
  if (is_blue_tool(call.tool) && mission.phase != Phase::Blue) {
    return {ToolStatus::Error, {}, "phase violation: blue tool in red phase"};
  }

  if (call.tool == "get_network_state") return tool_get_network_state(world, mission, call);
  if (call.tool == "get_actionable_targets") return tool_get_actionable_targets(world, mission, call);
  if (call.tool == "stealth_check") return tool_stealth_check(world, mission, call);
  if (call.tool == "inspect_lab") return tool_inspect_lab(world, mission, call);
  if (call.tool == "coap_send") return tool_coap_send(world, mission, call);
  if (call.tool == "modbus_request") return tool_modbus_request(world, mission, call);
  if (call.tool == "tcp_send") return tool_raw_send(world, mission, call, Transport::TCP);
  if (call.tool == "udp_send") return tool_raw_send(world, mission, call, Transport::UDP);
  if (call.tool == "mqtt_publish") return tool_mqtt_publish(world, mission, call);
  if (call.tool == "mqtt_subscribe") return tool_mqtt_subscribe(world, mission, call);
  if (call.tool == "verify_crash") return tool_verify_crash(world, mission, call);
  if (call.tool == "verify_patch") return tool_verify_patch(world, mission, call);
  if (call.tool == "list_patches") return tool_list_patches(world, mission, call);

  if (call.tool == "iptables_rule") {
    DefensiveRule rule;
    std::string transport = call.args.value("transport", "udp");
    rule.kind = IptablesDrop{transport == "tcp" ? Transport::TCP : Transport::UDP,
                             static_cast<uint16_t>(call.args.value("port", 0)), call.target_ip};
    uint16_t port = static_cast<uint16_t>(call.args.value("port", 0));
    Protocol proto = protocol_of_port(port).value_or(Protocol::CoAP);
    return apply_patch_rule(world, mission, call, rule, proto);
  }
  if (call.tool == "modbus_fc_filter") {
    DefensiveRule rule;
    ModbusFcFilter filter;
    filter.dst_ip = call.target_ip;
    if (call.args.contains("blocked_fcs")) {
      for (const auto& fc : call.args["blocked_fcs"]) {
        filter.blocked_fcs.insert(static_cast<uint8_t>(fc.get<int>()));
      }
    }
    rule.kind = filter;
    return apply_patch_rule(world, mission, call, rule, Protocol::Modbus);
  }
  if (call.tool == "coap_rate_limit") {
    DefensiveRule rule;
    rule.kind = CoapRateLimit{call.target_ip, call.args.value("max_per_s", 0.0)};
    return apply_patch_rule(world, mission, call, rule, Protocol::CoAP);
  }
  if (call.tool == "protocol_block") {
    DefensiveRule rule;
    std::string proto = call.args.value("protocol", "");
    Protocol p = proto == "modbus" ? Protocol::Modbus
                 : proto == "mqtt" ? Protocol::MQTT
                                   : Protocol::CoAP;
    rule.kind = ProtocolBlock{call.target_ip, p};
    return apply_patch_rule(world, mission, call, rule, p);
  }

  return {ToolStatus::Error, {}, "unhandled tool"};
}

nlohmann::json tool_schemas() {
  auto schema = [](std::string name, std::string description, nlohmann::json properties,
                   nlohmann::json required) {
    return nlohmann::json{{"name", name},
                          {"description", description},
                          {"parameters",
                           {{"type", "object"},
                            {"properties", properties},
                            {"required", required}}}};
  };
  auto str = [](std::string d) { return nlohmann::json{{"type", "string"}, {"description", d}}; };
  auto num = [](std::string d) { return nlohmann::json{{"type", "number"}, {"description", d}}; };
  auto boolean = [](std::string d) {
    return nlohmann::json{{"type", "boolean"}, {"description", d}};
  };

  nlohmann::json tools = nlohmann::json::array();
  tools.push_back(schema("get_network_state", "List devices, open ports, and reachability.",
                         nlohmann::json::object(), nlohmann::json::array()));
  tools.push_back(schema("get_actionable_targets",
                         "List targets not yet confirmed crashed or fully patched.",
                         nlohmann::json::object(), nlohmann::json::array()));
  tools.push_back(schema("stealth_check",
                         "Count attacker-originated frames seen by a passive monitor.",
                         {{"window_s", num("observation window in seconds (default 60)")}},
                         nlohmann::json::array()));
  tools.push_back(schema("inspect_lab", "Static topology metadata: segments and gateways.",
                         nlohmann::json::object(), nlohmann::json::array()));
  tools.push_back(schema(
      "coap_send", "Send a CoAP request; raw_options crafts malformed option bytes.",
      {{"target_ip", str("destination ip")},
       {"method", str("get or post")},
       {"path", str("resource path, e.g. /sensor")},
       {"message_id", num("16-bit message id")},
       {"confirmable", boolean("CON when true, NON when false")},
       {"token", str("token as hex, at most 8 bytes")},
       {"payload", str("payload text")},
       {"raw_options", str("hex bytes substituted verbatim for the options region")},
       {"port", num("udp port (default 5683)")}},
      nlohmann::json::array({"target_ip"})));
  tools.push_back(schema(
      "modbus_request", "Send a Modbus/TCP ADU; the length override forges the MBAP field.",
      {{"target_ip", str("destination ip")},
       {"function_code", num("modbus function code")},
       {"address", num("register address")},
       {"count", num("register count for reads")},
       {"value", num("register value for writes")},
       {"data", str("raw PDU data as hex (overrides address/count)")},
       {"declared_length_override", num("forged MBAP length field")},
       {"transaction_id", num("transaction id")},
       {"unit_id", num("unit id")},
       {"port", num("tcp port (default 502)")}},
      nlohmann::json::array({"target_ip", "function_code"})));
  tools.push_back(schema("tcp_send", "Send raw bytes over TCP.",
                         {{"target_ip", str("destination ip")},
                          {"port", num("tcp port")},
                          {"data", str("payload as hex")}},
                         nlohmann::json::array({"target_ip", "port", "data"})));
  tools.push_back(schema("udp_send", "Send raw bytes over UDP.",
                         {{"target_ip", str("destination ip")},
                          {"port", num("udp port")},
                          {"data", str("payload as hex")}},
                         nlohmann::json::array({"target_ip", "port", "data"})));
  tools.push_back(schema("mqtt_publish", "Publish a message through a broker.",
                         {{"target_ip", str("broker ip")},
                          {"topic", str("topic")},
                          {"payload", str("payload text")}},
                         nlohmann::json::array({"target_ip", "topic"})));
  tools.push_back(schema("mqtt_subscribe",
                         "Subscribe and listen for a window; reports retained values too.",
                         {{"target_ip", str("broker ip")},
                          {"topic_filter", str("filter, e.g. #")},
                          {"listen_window_s", num("listen window in seconds (default 10)")}},
                         nlohmann::json::array({"target_ip"})));
  tools.push_back(schema("verify_crash", "Probe all known ports to confirm a crash or silence.",
                         {{"target_ip", str("target ip")}},
                         nlohmann::json::array({"target_ip"})));
  tools.push_back(schema("verify_shell", "Check shell access on a compromised host.",
                         {{"target_ip", str("target ip")}},
                         nlohmann::json::array({"target_ip"})));
  tools.push_back(schema("iptables_rule", "Install a drop rule for (transport, port, dst).",
                         {{"target_ip", str("destination ip to protect")},
                          {"transport", str("tcp or udp")},
                          {"port", num("port to drop")}},
                         nlohmann::json::array({"target_ip", "transport", "port"})));
  tools.push_back(schema("modbus_fc_filter", "Block selected Modbus function codes.",
                         {{"target_ip", str("destination ip to protect")},
                          {"blocked_fcs", {{"type", "array"}, {"items", {{"type", "number"}}},
                                           {"description", "function codes to block"}}}},
                         nlohmann::json::array({"target_ip", "blocked_fcs"})));
  tools.push_back(schema("coap_rate_limit", "Rate-limit CoAP traffic per source.",
                         {{"target_ip", str("destination ip to protect")},
                          {"max_per_s", num("token bucket rate")}},
                         nlohmann::json::array({"target_ip", "max_per_s"})));
  tools.push_back(schema("verify_patch", "Replay the stored exploit against a finding.",
                         {{"finding_id", num("finding to verify")}},
                         nlohmann::json::array({"finding_id"})));
  tools.push_back(schema("list_patches", "List installed patches and verification state.",
                         nlohmann::json::object(), nlohmann::json::array()));
  tools.push_back(schema("protocol_block", "Block a whole protocol towards a destination.",
                         {{"target_ip", str("destination ip to protect")},
                          {"protocol", str("coap, modbus, or mqtt")}},
                         nlohmann::json::array({"target_ip", "protocol"})));
  tools.push_back(schema("run_command", "Run a shell command on a Linux target.",
                         {{"target_ip", str("target ip")}, {"command", str("shell command")}},
                         nlohmann::json::array({"target_ip", "command"})));
  tools.push_back(schema("remote_exec", "Execute a command over SSH on a compromised host.",
                         {{"target_ip", str("target ip")}, {"command", str("shell command")}},
                         nlohmann::json::array({"target_ip", "command"})));
  tools.push_back(schema("create_tool", "Generate a new tool at runtime.",
                         {{"name", str("tool name")}, {"source", str("tool source code")}},
                         nlohmann::json::array({"name", "source"})));

  return nlohmann::json{{"version", 1}, {"tools", tools}};
}

}  // namespace apiot
