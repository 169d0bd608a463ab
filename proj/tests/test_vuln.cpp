#include "doctest.h"

#include <optional>

#include "apiot/coap.hpp"
#include "apiot/modbus.hpp"
#include "apiot/mqtt.hpp"
#include "apiot/rng.hpp"
#include "apiot/vuln.hpp"

using namespace apiot;

namespace {

VulnProfile coap_profile() {
  VulnProfile p;
  p.triggers = {VulnClass::CoapOptionOverflow};
  return p;
}

VulnProfile modbus_profile() {
  VulnProfile p;
  p.triggers = {VulnClass::ModbusLengthOverflow};
  return p;
}

VulnProfile mqtt_profile() {
  VulnProfile p;
  p.triggers = {VulnClass::MqttShutdownCommand};
  p.mqtt_command_topic = "cmd/dev1";
  return p;
}

// Independent re-parse oracles, written against the wire formats rather than
// the production decoders.

bool coap_oracle_trigger(const Bytes& f) {
  if (f.size() < 4) return false;
  if ((f[0] >> 6) != 1) return false;
  size_t tkl = f[0] & 0xF;
  if (tkl > 8) return true;  // reserved token length
  size_t i = 4 + tkl;
  if (i > f.size()) return false;  // truncated, not an option defect
  size_t number = 0;
  while (i < f.size()) {
    uint8_t b = f[i++];
    if (b == 0xFF) return false;
    size_t vals[2] = {static_cast<size_t>(b >> 4), static_cast<size_t>(b & 0xF)};
    bool reserved = false;
    for (size_t k = 0; k < 2; ++k) {
      size_t nib = vals[k];
      if (nib == 15) {
        reserved = true;
        vals[k] = 0;
      } else if (nib == 13) {
        if (i + 1 > f.size()) return true;
        vals[k] = 13 + f[i];
        i += 1;
      } else if (nib == 14) {
        if (i + 2 > f.size()) return true;
        vals[k] = 269 + ((f[i] << 8) | f[i + 1]);
        i += 2;
      }
    }
    if (f.size() - i < vals[1]) return true;  // value runs past the frame
    if (reserved) return true;
    number += vals[0];
    if (number > 0xFFFF) return true;  // option number overflow
    i += vals[1];
  }
  return false;
}

bool modbus_oracle_trigger(const Bytes& f) {
  if (f.size() < 8) return false;
  size_t declared = (f[4] << 8) | f[5];
  if (declared < 2) return false;  // rejected outright, never reaches the handler
  size_t actual = f.size() - 6;
  return declared > actual + 4;
}

bool mqtt_oracle_trigger(const Bytes& f, const std::string& command_topic) {
  if (f.size() < 2) return false;
  if ((f[0] >> 4) != 3) return false;  // PUBLISH
  size_t remaining = 0, i = 1, mult = 1;
  while (true) {
    if (i >= f.size()) return false;
    uint8_t b = f[i++];
    remaining += static_cast<size_t>(b & 0x7F) * mult;
    if (!(b & 0x80)) break;
    mult *= 128;
    if (mult > 128u * 128u * 128u) return false;
  }
  if (i + remaining > f.size()) return false;
  size_t end = i + remaining;
  if (i + 2 > end) return false;
  size_t tlen = (f[i] << 8) | f[i + 1];
  i += 2;
  if (i + tlen > end) return false;
  std::string topic(f.begin() + i, f.begin() + i + tlen);
  i += tlen;
  std::string payload(f.begin() + i, f.begin() + end);
  return topic == command_topic && payload == "shutdown";
}

Bytes random_frame(Rng& rng, size_t max_len) {
  Bytes f(rng.below(max_len + 1));
  for (auto& b : f) b = static_cast<uint8_t>(rng.below(256));
  return f;
}

}  // namespace

TEST_CASE("classify_trigger: canonical frames") {
  auto coap_bad = *from_hex("40011234fd00");
  CHECK(classify_trigger(coap_bad, Protocol::CoAP, coap_profile()) ==
        VulnClass::CoapOptionOverflow);
  CHECK(!classify_trigger(coap_bad, Protocol::CoAP, VulnProfile{}));
  CHECK(!classify_trigger(*from_hex("40011234"), Protocol::CoAP, coap_profile()));

  modbus::Adu adu;
  adu.function_code = 3;
  put_u16(adu.data, 0);
  put_u16(adu.data, 1);
  auto forged = modbus::encode(adu, 0xFFFF);
  CHECK(classify_trigger(forged.value(), Protocol::Modbus, modbus_profile()) ==
        VulnClass::ModbusLengthOverflow);
  auto honest = modbus::encode(adu);
  CHECK(!classify_trigger(honest.value(), Protocol::Modbus, modbus_profile()));

  mqtt::Packet pub;
  pub.kind = mqtt::PacketKind::Publish;
  pub.topic = "cmd/dev1";
  std::string body = kShutdownPayload;
  pub.payload = Bytes(body.begin(), body.end());
  CHECK(classify_trigger(mqtt::encode(pub).value(), Protocol::MQTT, mqtt_profile()) ==
        VulnClass::MqttShutdownCommand);
  pub.topic = "telemetry/dev1";
  CHECK(!classify_trigger(mqtt::encode(pub).value(), Protocol::MQTT, mqtt_profile()));
}

TEST_CASE("classify_trigger: modbus slack boundary") {
  modbus::Adu adu;
  adu.function_code = 3;
  put_u16(adu.data, 0);
  put_u16(adu.data, 1);  // body length 6
  // declared = actual + slack is still tolerated; one past is the trigger.
  CHECK(!classify_trigger(modbus::encode(adu, 6 + kModbusLengthSlack).value(), Protocol::Modbus,
                          modbus_profile()));
  CHECK(classify_trigger(modbus::encode(adu, 6 + kModbusLengthSlack + 1).value(),
                         Protocol::Modbus, modbus_profile()) ==
        VulnClass::ModbusLengthOverflow);
}

TEST_CASE("classify_trigger agrees with brute-force oracles on frames <= 64 bytes") {
  Rng rng(0x0DDC0FFE);
  auto coap_p = coap_profile();
  auto modbus_p = modbus_profile();
  auto mqtt_p = mqtt_profile();

  for (int i = 0; i < 20000; ++i) {
    Bytes f = random_frame(rng, 64);
    bool got_coap = classify_trigger(f, Protocol::CoAP, coap_p).has_value();
    CHECK(got_coap == coap_oracle_trigger(f));
    bool got_modbus = classify_trigger(f, Protocol::Modbus, modbus_p).has_value();
    CHECK(got_modbus == modbus_oracle_trigger(f));
    bool got_mqtt = classify_trigger(f, Protocol::MQTT, mqtt_p).has_value();
    CHECK(got_mqtt == mqtt_oracle_trigger(f, "cmd/dev1"));
  }

  // Random bytes rarely form a PUBLISH; bias part of the corpus toward
  // near-valid frames so the MQTT comparison is not vacuous.
  for (int i = 0; i < 5000; ++i) {
    mqtt::Packet pub;
    pub.kind = mqtt::PacketKind::Publish;
    pub.topic = rng.bernoulli(0.5) ? "cmd/dev1" : "cmd/dev2";
    std::string body = rng.bernoulli(0.5) ? "shutdown" : "restart";
    pub.payload = Bytes(body.begin(), body.end());
    Bytes f = mqtt::encode(pub).value();
    if (rng.bernoulli(0.3)) f[rng.below(f.size())] = static_cast<uint8_t>(rng.below(256));
    CHECK(classify_trigger(f, Protocol::MQTT, mqtt_p).has_value() ==
          mqtt_oracle_trigger(f, "cmd/dev1"));
  }

  // Likewise bias CoAP toward well-formed-then-mutated frames.
  for (int i = 0; i < 5000; ++i) {
    coap::Message msg;
    msg.message_id = static_cast<uint16_t>(rng.below(65536));
    msg.options = coap::uri_path_options("/sensor");
    Bytes f = coap::encode(msg).value();
    if (rng.bernoulli(0.6)) f[rng.below(f.size())] = static_cast<uint8_t>(rng.below(256));
    if (f.size() > 64) continue;
    CHECK(classify_trigger(f, Protocol::CoAP, coap_p).has_value() == coap_oracle_trigger(f));
  }
}
