#include "apiot/vuln.hpp"

#include "apiot/coap.hpp"
#include "apiot/modbus.hpp"
#include "apiot/mqtt.hpp"

namespace apiot {

const char* to_string(Protocol p) {
  switch (p) {
    case Protocol::CoAP: return "coap";
    case Protocol::Modbus: return "modbus";
    case Protocol::MQTT: return "mqtt";
  }
  return "unknown";
}

const char* to_string(VulnClass v) {
  switch (v) {
    case VulnClass::CoapOptionOverflow: return "coap_option_overflow";
    case VulnClass::ModbusLengthOverflow: return "modbus_length_overflow";
    case VulnClass::MqttShutdownCommand: return "mqtt_shutdown_command";
  }
  return "unknown";
}

std::optional<VulnClass> vuln_class_from_string(const std::string& s) {
  if (s == "coap_option_overflow") return VulnClass::CoapOptionOverflow;
  if (s == "modbus_length_overflow") return VulnClass::ModbusLengthOverflow;
  if (s == "mqtt_shutdown_command") return VulnClass::MqttShutdownCommand;
  return std::nullopt;
}

std::optional<VulnClass> classify_trigger(const Bytes& frame, Protocol protocol,
                                          const VulnProfile& profile) {
  switch (protocol) {
    case Protocol::CoAP: {
      if (!profile.has(VulnClass::CoapOptionOverflow)) return std::nullopt;
      auto res = coap::decode(frame);
      if (!res.ok() && (res.error().kind == coap::ParseErrorKind::ReservedNibble ||
                        res.error().kind == coap::ParseErrorKind::OptionOverrun)) {
        return VulnClass::CoapOptionOverflow;
      }
      return std::nullopt;
    }
    case Protocol::Modbus: {
      if (!profile.has(VulnClass::ModbusLengthOverflow)) return std::nullopt;
      auto res = modbus::decode(frame);
      if (res.ok() &&
          res.value().declared_length > res.value().actual_body_length + kModbusLengthSlack) {
        return VulnClass::ModbusLengthOverflow;
      }
      return std::nullopt;
    }
    case Protocol::MQTT: {
      if (!profile.has(VulnClass::MqttShutdownCommand) || !profile.mqtt_command_topic) {
        return std::nullopt;
      }
      auto res = mqtt::decode(frame);
      if (res.ok() && res.value().kind == mqtt::PacketKind::Publish && res.value().topic &&
          *res.value().topic == *profile.mqtt_command_topic && res.value().payload) {
        const Bytes& p = *res.value().payload;
        if (std::string(p.begin(), p.end()) == kShutdownPayload) {
          return VulnClass::MqttShutdownCommand;
        }
      }
      return std::nullopt;
    }
  }
  return std::nullopt;
}

}  // namespace apiot
