#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>

#include "apiot/bytes.hpp"

namespace apiot {

enum class Protocol { CoAP, Modbus, MQTT };

enum class Transport { TCP, UDP };

enum class VulnClass { CoapOptionOverflow, ModbusLengthOverflow, MqttShutdownCommand };

const char* to_string(Protocol p);
const char* to_string(VulnClass v);
std::optional<VulnClass> vuln_class_from_string(const std::string& s);

struct VulnProfile {
  std::set<VulnClass> triggers;
  // Required when MqttShutdownCommand is present.
  std::optional<std::string> mqtt_command_topic;

  bool has(VulnClass v) const { return triggers.count(v) > 0; }
};

// Payload that silences an MQTT-controlled MCU when published to its command
// topic.
inline constexpr const char* kShutdownPayload = "shutdown";

// Modbus length-field overflow: declared length "far exceeds" the body.
// Slack of 4 bytes absorbs benign trailing bytes.
inline constexpr int kModbusLengthSlack = 4;

// Pure predicate: the vulnerability class `frame` would trigger on a device
// carrying `profile`, or nullopt. Unparseable non-trigger frames yield nullopt.
std::optional<VulnClass> classify_trigger(const Bytes& frame, Protocol protocol,
                                          const VulnProfile& profile);

}  // namespace apiot
