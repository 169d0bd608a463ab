#include "apiot/device.hpp"

#include "apiot/coap.hpp"
#include "apiot/modbus.hpp"

namespace apiot {

const char* to_string(DeviceClass c) {
  switch (c) {
    case DeviceClass::CoapMcu: return "coap_mcu";
    case DeviceClass::ModbusMcu: return "modbus_mcu";
    case DeviceClass::MqttMcu: return "mqtt_mcu";
    case DeviceClass::EchoMcu: return "echo_mcu";
    case DeviceClass::Gateway: return "gateway";
    case DeviceClass::Broker: return "broker";
    case DeviceClass::HmiStation: return "hmi_station";
  }
  return "unknown";
}

std::vector<PortSpec> default_ports(DeviceClass cls) {
  switch (cls) {
    case DeviceClass::CoapMcu: return {{Transport::UDP, 5683}};
    case DeviceClass::ModbusMcu: return {{Transport::TCP, 502}};
    case DeviceClass::MqttMcu: return {};  // telemetry flows through its broker
    case DeviceClass::EchoMcu: return {{Transport::TCP, 4242}, {Transport::UDP, 4242}};
    case DeviceClass::Gateway: return {};
    case DeviceClass::Broker: return {{Transport::TCP, 1883}};
    case DeviceClass::HmiStation: return {};
  }
  return {};
}

Expected<Device, SpawnError> Device::spawn(DeviceSpec spec) {
  if (spec.vuln.has(VulnClass::MqttShutdownCommand) && !spec.vuln.mqtt_command_topic) {
    return SpawnError::MissingCommandTopic;
  }
  if (spec.listen_ports.empty()) spec.listen_ports = default_ports(spec.cls);
  if (spec.cls == DeviceClass::MqttMcu && spec.telemetry_topic.empty()) {
    spec.telemetry_topic = "telemetry/" + spec.device_id;
  }
  Device d(std::move(spec));
  d.reset_memory();
  d.next_telemetry_ms_ = d.spec_.telemetry_period_s * 1000.0;
  return d;
}

void Device::reset_memory() {
  registers_.clear();
  resources_.clear();
  if (spec_.cls == DeviceClass::ModbusMcu) {
    for (uint16_t i = 0; i < 16; ++i) registers_[i] = 0;
  }
  if (spec_.cls == DeviceClass::CoapMcu) {
    std::string sensor = "23.5";
    std::string core = "</sensor>,</.well-known/core>";
    resources_["/sensor"] = Bytes(sensor.begin(), sensor.end());
    resources_["/.well-known/core"] = Bytes(core.begin(), core.end());
  }
}

void Device::crash(double now_ms) {
  crashed_ = true;
  crashed_at_ms_ = now_ms;
}

void Device::recover_if_due(double now_ms) {
  if (crashed_ && now_ms >= crashed_at_ms_ + spec_.recovery_delay_s * 1000.0) {
    crashed_ = false;
    silenced_ = false;
    reset_memory();  // reboot to spawn defaults
  }
  if (silenced_ && !crashed_ && now_ms >= silenced_at_ms_ + spec_.recovery_delay_s * 1000.0) {
    silenced_ = false;
  }
}

bool Device::listens_on(Transport transport, uint16_t port) const {
  for (const PortSpec& p : spec_.listen_ports) {
    if (p.transport == transport && p.port == port) return true;
  }
  return false;
}

DeliveryEffect Device::deliver(const Bytes& frame, Transport transport, uint16_t port,
                               double now_ms) {
  recover_if_due(now_ms);
  if (crashed_) return {};  // crashed devices emit nothing
  if (!listens_on(transport, port)) return {};

  switch (spec_.cls) {
    case DeviceClass::CoapMcu: {
      if (auto v = classify_trigger(frame, Protocol::CoAP, spec_.vuln)) {
        crash(now_ms);
        DeliveryEffect e;
        e.crashed = true;
        return e;
      }
      return handle_coap(frame);
    }
    case DeviceClass::ModbusMcu: {
      if (auto v = classify_trigger(frame, Protocol::Modbus, spec_.vuln)) {
        crash(now_ms);
        DeliveryEffect e;
        e.crashed = true;
        return e;
      }
      return handle_modbus(frame);
    }
    case DeviceClass::EchoMcu: {
      DeliveryEffect e;
      e.response = frame;
      return e;
    }
    case DeviceClass::Broker:
      return handle_broker(frame);
    default:
      return {};
  }
}

DeliveryEffect Device::deliver_mqtt(const std::string& topic, const Bytes& payload,
                                    double now_ms) {
  recover_if_due(now_ms);
  if (crashed_) return {};
  DeliveryEffect e;
  if (spec_.cls == DeviceClass::MqttMcu && spec_.vuln.has(VulnClass::MqttShutdownCommand) &&
      spec_.vuln.mqtt_command_topic && topic == *spec_.vuln.mqtt_command_topic &&
      std::string(payload.begin(), payload.end()) == kShutdownPayload) {
    silenced_ = true;
    silenced_at_ms_ = now_ms;
    e.silenced = true;
  }
  return e;
}

DeliveryEffect Device::handle_coap(const Bytes& frame) {
  DeliveryEffect e;
  auto res = coap::decode(frame);
  if (!res.ok()) {
    // Malformed but not this device's trigger: reject safely.
    coap::Message rst;
    rst.type = coap::MsgType::Rst;
    rst.code = coap::kCodeEmpty;
    if (frame.size() >= 4) rst.message_id = get_u16(frame, 2);
    e.response = coap::encode(rst).value();
    return e;
  }
  const coap::Message& req = res.value();
  coap::Message ack;
  ack.type = req.type == coap::MsgType::Con ? coap::MsgType::Ack : coap::MsgType::Non;
  ack.message_id = req.message_id;
  ack.token = req.token;
  std::string path = coap::path_from_options(req);
  if (path.empty()) path = "/sensor";
  auto it = resources_.find(path);
  if (req.code == coap::kCodeGet && it != resources_.end()) {
    ack.code = coap::kCodeContent;
    ack.payload = it->second;
  } else if (req.code == coap::kCodeGet) {
    ack.code = coap::kCodeNotFound;
  } else {
    ack.code = coap::kCodeBadRequest;
  }
  e.response = coap::encode(ack).value();
  return e;
}

DeliveryEffect Device::handle_modbus(const Bytes& frame) {
  DeliveryEffect e;
  auto res = modbus::decode(frame);
  if (!res.ok()) return {};  // garbage on TCP/502: drop the connection
  const modbus::Adu& req = res.value();

  modbus::Adu resp;
  resp.transaction_id = req.transaction_id;
  resp.unit_id = req.unit_id;
  uint8_t fc = req.function_code.value_or(0);

  auto exception = [&](uint8_t code) {
    resp.function_code = static_cast<uint8_t>(fc | 0x80);
    resp.data = {code};
  };

  if (fc == modbus::kFcReadHolding && req.data.size() >= 4) {
    uint16_t addr = get_u16(req.data, 0);
    uint16_t count = get_u16(req.data, 2);
    if (count == 0 || count > 125) {
      exception(0x03);
    } else {
      resp.function_code = fc;
      resp.data.push_back(static_cast<uint8_t>(count * 2));
      for (uint16_t i = 0; i < count; ++i) {
        auto it = registers_.find(static_cast<uint16_t>(addr + i));
        put_u16(resp.data, it != registers_.end() ? it->second : 0);
      }
    }
  } else if (fc == modbus::kFcWriteSingle && req.data.size() >= 4) {
    uint16_t addr = get_u16(req.data, 0);
    uint16_t value = get_u16(req.data, 2);
    registers_[addr] = value;
    resp.function_code = fc;
    resp.data = req.data;
  } else if (fc == modbus::kFcWriteMultiple && req.data.size() >= 5) {
    uint16_t addr = get_u16(req.data, 0);
    uint16_t count = get_u16(req.data, 2);
    uint8_t byte_count = req.data[4];
    if (req.data.size() < 5u + byte_count || byte_count != count * 2) {
      exception(0x03);
    } else {
      for (uint16_t i = 0; i < count; ++i) {
        registers_[static_cast<uint16_t>(addr + i)] = get_u16(req.data, 5 + i * 2);
      }
      resp.function_code = fc;
      put_u16(resp.data, addr);
      put_u16(resp.data, count);
    }
  } else {
    exception(0x01);  // illegal function
  }
  e.response = modbus::encode(resp).value();
  return e;
}

DeliveryEffect Device::handle_broker(const Bytes& frame) {
  DeliveryEffect e;
  auto res = mqtt::decode(frame);
  if (!res.ok()) return {};
  const mqtt::Packet& pkt = res.value();
  switch (pkt.kind) {
    case mqtt::PacketKind::Connect:
      e.response = mqtt::encode({mqtt::PacketKind::Connack}).value();
      break;
    case mqtt::PacketKind::Pingreq:
      e.response = mqtt::encode({mqtt::PacketKind::Pingresp}).value();
      break;
    case mqtt::PacketKind::Subscribe: {
      mqtt::Packet ack;
      ack.kind = mqtt::PacketKind::Suback;
      ack.packet_id = pkt.packet_id;
      e.response = mqtt::encode(ack).value();
      break;
    }
    case mqtt::PacketKind::Publish:
      e.broker_publish = pkt;  // the world fans this out to subscribers
      break;
    default:
      break;
  }
  return e;
}

std::vector<TelemetryEvent> Device::tick(double now_ms) {
  recover_if_due(now_ms);
  std::vector<TelemetryEvent> events;
  if (spec_.cls == DeviceClass::MqttMcu) {
    double period_ms = spec_.telemetry_period_s * 1000.0;
    while (next_telemetry_ms_ <= now_ms) {
      if (!crashed_ && !silenced_) {
        std::string value = "seq=" + std::to_string(telemetry_seq_++);
        events.push_back(TelemetryEvent{next_telemetry_ms_, spec_.broker_ip,
                                        spec_.telemetry_topic, Bytes(value.begin(), value.end())});
      }
      next_telemetry_ms_ += period_ms;
      recover_if_due(next_telemetry_ms_ <= now_ms ? next_telemetry_ms_ : now_ms);
    }
  }
  last_tick_ms_ = now_ms;
  return events;
}

}  // namespace apiot
