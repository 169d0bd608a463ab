#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "apiot/bytes.hpp"
#include "apiot/mqtt.hpp"
#include "apiot/vuln.hpp"

namespace apiot {

enum class DeviceClass { CoapMcu, ModbusMcu, MqttMcu, EchoMcu, Gateway, Broker, HmiStation };

const char* to_string(DeviceClass c);

struct PortSpec {
  Transport transport;
  uint16_t port;
};

struct DeviceSpec {
  std::string device_id;
  DeviceClass cls = DeviceClass::EchoMcu;
  std::string ip;
  std::vector<PortSpec> listen_ports;  // empty -> class defaults
  VulnProfile vuln;
  std::string segment;
  double recovery_delay_s = 30.0;
  double telemetry_period_s = 5.0;   // MqttMcu
  std::string telemetry_topic;       // MqttMcu
  std::string broker_ip;             // MqttMcu: broker carrying its topics
};

std::vector<PortSpec> default_ports(DeviceClass cls);

struct DeliveryEffect {
  std::optional<Bytes> response;
  bool crashed = false;
  bool silenced = false;
  // Set when a broker accepted a PUBLISH; the world forwards it.
  std::optional<mqtt::Packet> broker_publish;
};

struct TelemetryEvent {
  double time_ms;
  std::string broker_ip;
  std::string topic;
  Bytes payload;
};

enum class SpawnError { DuplicateIp, MissingCommandTopic, ClockRegression };

// One simulated OT node. Crash/recovery semantics: a crashed device emits
// nothing until recovery_delay_s has elapsed, then reboots to spawn defaults.
class Device {
 public:
  static Expected<Device, SpawnError> spawn(DeviceSpec spec);

  const DeviceSpec& spec() const { return spec_; }
  bool crashed() const { return crashed_; }
  bool silenced() const { return silenced_; }
  double crashed_at_ms() const { return crashed_at_ms_; }
  const std::map<uint16_t, uint16_t>& registers() const { return registers_; }
  const std::map<std::string, Bytes>& resources() const { return resources_; }

  bool listens_on(Transport transport, uint16_t port) const;

  // Applies lazy recovery at `now_ms` before handling the frame.
  DeliveryEffect deliver(const Bytes& frame, Transport transport, uint16_t port, double now_ms);

  // Logical MQTT delivery from the broker side (command topics).
  DeliveryEffect deliver_mqtt(const std::string& topic, const Bytes& payload, double now_ms);

  // Advances the device clock; returns telemetry publishes emitted in
  // (last_tick, now]. Errors on clock regression are reported by the caller.
  std::vector<TelemetryEvent> tick(double now_ms);

  void recover_if_due(double now_ms);

 private:
  explicit Device(DeviceSpec spec) : spec_(std::move(spec)) {}
  void reset_memory();
  void crash(double now_ms);

  DeliveryEffect handle_coap(const Bytes& frame);
  DeliveryEffect handle_modbus(const Bytes& frame);
  DeliveryEffect handle_broker(const Bytes& frame);

  DeviceSpec spec_;
  bool crashed_ = false;
  double crashed_at_ms_ = 0;
  bool silenced_ = false;
  double silenced_at_ms_ = 0;
  std::map<uint16_t, uint16_t> registers_;
  std::map<std::string, Bytes> resources_;
  double last_tick_ms_ = 0;
  double next_telemetry_ms_ = 0;
  uint32_t telemetry_seq_ = 0;
};

}  // namespace apiot
