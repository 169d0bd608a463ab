#include "doctest.h"

#include "apiot/coap.hpp"
#include "apiot/device.hpp"
#include "apiot/modbus.hpp"
#include "apiot/mqtt.hpp"

using namespace apiot;

namespace {

DeviceSpec coap_spec() {
  DeviceSpec s;
  s.device_id = "dev-coap";
  s.cls = DeviceClass::CoapMcu;
  s.ip = "192.168.100.10";
  s.vuln.triggers = {VulnClass::CoapOptionOverflow};
  return s;
}

Bytes coap_get(const std::string& path, uint16_t mid) {
  coap::Message msg;
  msg.code = coap::kCodeGet;
  msg.message_id = mid;
  msg.options = coap::uri_path_options(path);
  return coap::encode(msg).value();
}

}  // namespace

TEST_CASE("device: spawn fills class defaults") {
  auto d = Device::spawn(coap_spec());
  REQUIRE(d.ok());
  CHECK(d.value().spec().listen_ports.size() == 1);
  CHECK(d.value().spec().listen_ports[0].port == 5683);

  DeviceSpec ms;
  ms.device_id = "dev1";
  ms.cls = DeviceClass::MqttMcu;
  ms.ip = "10.0.0.2";
  auto m = Device::spawn(ms);
  REQUIRE(m.ok());
  CHECK(m.value().spec().telemetry_topic == "telemetry/dev1");

  DeviceSpec bad = ms;
  bad.vuln.triggers = {VulnClass::MqttShutdownCommand};  // no command topic
  CHECK(!Device::spawn(bad).ok());
}

TEST_CASE("device: coap resource handling") {
  Device d = Device::spawn(coap_spec()).value();

  auto e = d.deliver(coap_get("/sensor", 1), Transport::UDP, 5683, 0);
  REQUIRE(e.response);
  auto resp = coap::decode(*e.response);
  REQUIRE(resp.ok());
  CHECK(resp.value().code == coap::kCodeContent);
  CHECK(std::string(resp.value().payload.begin(), resp.value().payload.end()) == "23.5");

  e = d.deliver(coap_get("/nope", 2), Transport::UDP, 5683, 0);
  CHECK(coap::decode(*e.response).value().code == coap::kCodeNotFound);

  // Malformed but not the trigger class: reset, not crash.
  e = d.deliver(*from_hex("80011234"), Transport::UDP, 5683, 0);
  REQUIRE(e.response);
  CHECK(coap::decode(*e.response).value().type == coap::MsgType::Rst);
  CHECK(!d.crashed());

  // Wrong port: silence.
  e = d.deliver(coap_get("/sensor", 3), Transport::UDP, 9999, 0);
  CHECK(!e.response);
}

TEST_CASE("device: crash and timed recovery") {
  Device d = Device::spawn(coap_spec()).value();
  auto e = d.deliver(*from_hex("40011234fd00"), Transport::UDP, 5683, 1000.0);
  CHECK(e.crashed);
  CHECK(d.crashed());
  CHECK(!e.response);

  // Crashed: total silence, even for well-formed requests.
  CHECK(!d.deliver(coap_get("/sensor", 4), Transport::UDP, 5683, 2000.0).response);

  // One millisecond before the reboot deadline: still down.
  CHECK(!d.deliver(coap_get("/sensor", 5), Transport::UDP, 5683, 30999.0).response);

  // After recovery_delay_s the device reboots to spawn defaults.
  auto after = d.deliver(coap_get("/sensor", 6), Transport::UDP, 5683, 31000.0);
  REQUIRE(after.response);
  CHECK(!d.crashed());
}

TEST_CASE("device: modbus register semantics and reboot reset") {
  DeviceSpec s;
  s.device_id = "dev-modbus";
  s.cls = DeviceClass::ModbusMcu;
  s.ip = "192.168.100.10";
  s.vuln.triggers = {VulnClass::ModbusLengthOverflow};
  Device d = Device::spawn(s).value();

  modbus::Adu write;
  write.function_code = modbus::kFcWriteSingle;
  put_u16(write.data, 3);
  put_u16(write.data, 0xBEEF);
  d.deliver(modbus::encode(write).value(), Transport::TCP, 502, 0);
  CHECK(d.registers().at(3) == 0xBEEF);

  modbus::Adu read;
  read.function_code = modbus::kFcReadHolding;
  put_u16(read.data, 3);
  put_u16(read.data, 1);
  auto e = d.deliver(modbus::encode(read).value(), Transport::TCP, 502, 0);
  auto resp = modbus::decode(*e.response).value();
  CHECK(resp.data.size() == 3);
  CHECK(get_u16(resp.data, 1) == 0xBEEF);

  // Unknown function code: illegal-function exception.
  modbus::Adu odd;
  odd.function_code = 0x2B;
  e = d.deliver(modbus::encode(odd).value(), Transport::TCP, 502, 0);
  resp = modbus::decode(*e.response).value();
  CHECK(*resp.function_code == (0x2B | 0x80));
  CHECK(resp.data == Bytes{0x01});

  // Forged length crashes; the reboot zeroes registers.
  auto trigger = modbus::encode(read, 0xFFFF).value();
  CHECK(d.deliver(trigger, Transport::TCP, 502, 1000.0).crashed);
  e = d.deliver(modbus::encode(read).value(), Transport::TCP, 502, 40000.0);
  resp = modbus::decode(*e.response).value();
  CHECK(get_u16(resp.data, 1) == 0);
}

TEST_CASE("device: broker reply matrix") {
  DeviceSpec s;
  s.device_id = "broker-1";
  s.cls = DeviceClass::Broker;
  s.ip = "192.168.100.30";
  Device d = Device::spawn(s).value();

  auto enc = [](mqtt::Packet p) { return mqtt::encode(p).value(); };
  auto kind_of = [](const Bytes& b) { return mqtt::decode(b).value().kind; };

  mqtt::Packet con;
  con.kind = mqtt::PacketKind::Connect;
  con.topic = "client-1";
  CHECK(kind_of(*d.deliver(enc(con), Transport::TCP, 1883, 0).response) ==
        mqtt::PacketKind::Connack);
  CHECK(kind_of(*d.deliver(*from_hex("c000"), Transport::TCP, 1883, 0).response) ==
        mqtt::PacketKind::Pingresp);

  mqtt::Packet sub;
  sub.kind = mqtt::PacketKind::Subscribe;
  sub.packet_id = 9;
  sub.topic = "#";
  auto suback = mqtt::decode(*d.deliver(enc(sub), Transport::TCP, 1883, 0).response).value();
  CHECK(suback.kind == mqtt::PacketKind::Suback);
  CHECK(*suback.packet_id == 9);

  mqtt::Packet pub;
  pub.kind = mqtt::PacketKind::Publish;
  pub.topic = "a/b";
  pub.payload = Bytes{1, 2, 3};
  auto e = d.deliver(enc(pub), Transport::TCP, 1883, 0);
  CHECK(!e.response);  // qos 0: no ack
  REQUIRE(e.broker_publish);
  CHECK(*e.broker_publish->topic == "a/b");
}

TEST_CASE("device: mqtt mcu telemetry, shutdown silence, and recovery") {
  DeviceSpec s;
  s.device_id = "dev1";
  s.cls = DeviceClass::MqttMcu;
  s.ip = "192.168.100.40";
  s.broker_ip = "192.168.100.30";
  s.vuln.triggers = {VulnClass::MqttShutdownCommand};
  s.vuln.mqtt_command_topic = "cmd/dev1";
  Device d = Device::spawn(s).value();

  auto events = d.tick(11000.0);  // periods at 5s and 10s
  REQUIRE(events.size() == 2);
  CHECK(events[0].topic == "telemetry/dev1");
  CHECK(events[0].time_ms == 5000.0);
  CHECK(events[1].time_ms == 10000.0);

  // Wrong payload or topic: ignored.
  Bytes noise{'h', 'i'};
  CHECK(!d.deliver_mqtt("cmd/dev1", noise, 11000.0).silenced);
  Bytes shutdown{'s', 'h', 'u', 't', 'd', 'o', 'w', 'n'};
  CHECK(!d.deliver_mqtt("cmd/other", shutdown, 11000.0).silenced);
  CHECK(!d.silenced());

  CHECK(d.deliver_mqtt("cmd/dev1", shutdown, 11000.0).silenced);
  CHECK(d.silenced());

  // Silenced: the schedule advances but nothing is emitted.
  CHECK(d.tick(30000.0).empty());

  // Silence clears after the recovery delay; telemetry resumes.
  auto resumed = d.tick(50000.0);
  CHECK(!d.silenced());
  CHECK(!resumed.empty());
}
