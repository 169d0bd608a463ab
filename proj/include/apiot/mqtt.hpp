#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "apiot/bytes.hpp"

namespace apiot::mqtt {

enum class PacketKind : uint8_t {
  Connect = 1,
  Connack = 2,
  Publish = 3,
  Subscribe = 8,
  Suback = 9,
  Pingreq = 12,
  Pingresp = 13,
  Disconnect = 14,
};

// QoS-0 subset of MQTT 3.1.1; enough for subscribe / discover / publish.
struct Packet {
  PacketKind kind = PacketKind::Pingreq;
  std::optional<uint16_t> packet_id;
  std::optional<std::string> topic;  // client id for CONNECT
  std::optional<Bytes> payload;
  uint8_t qos = 0;
  bool operator==(const Packet&) const = default;
};

enum class CodecError {
  Truncated,
  UnknownPacketType,
  RemainingLengthOverrun,
  MissingTopic,
  BadQos,
};

const char* to_string(CodecError e);

Expected<Bytes, CodecError> encode(const Packet& pkt);
Expected<Packet, CodecError> decode(const Bytes& frame);

// '#' multi-level and '+' single-level wildcards.
bool topic_matches(const std::string& filter, const std::string& topic);

}  // namespace apiot::mqtt
