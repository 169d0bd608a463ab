#include "apiot/mqtt.hpp"

#include <sstream>

namespace apiot::mqtt {

const char* to_string(CodecError e) {
  switch (e) {
    case CodecError::Truncated: return "truncated";
    case CodecError::UnknownPacketType: return "unknown packet type";
    case CodecError::RemainingLengthOverrun: return "remaining-length overrun";
    case CodecError::MissingTopic: return "missing topic";
    case CodecError::BadQos: return "bad qos";
  }
  return "unknown";
}

namespace {

void put_varint(Bytes& out, size_t v) {
  do {
    uint8_t b = v % 128;
    v /= 128;
    if (v > 0) b |= 0x80;
    out.push_back(b);
  } while (v > 0);
}

void put_str(Bytes& out, const std::string& s) {
  put_u16(out, static_cast<uint16_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

struct Reader {
  const Bytes& b;
  size_t idx;
  size_t end;
  bool fail = false;

  uint8_t u8() {
    if (idx >= end) { fail = true; return 0; }
    return b[idx++];
  }
  uint16_t u16() {
    if (idx + 2 > end) { fail = true; return 0; }
    uint16_t v = get_u16(b, idx);
    idx += 2;
    return v;
  }
  std::string str() {
    uint16_t n = u16();
    if (fail || idx + n > end) { fail = true; return {}; }
    std::string s(b.begin() + idx, b.begin() + idx + n);
    idx += n;
    return s;
  }
  Bytes rest() {
    Bytes r(b.begin() + idx, b.begin() + end);
    idx = end;
    return r;
  }
};

}  // namespace

Expected<Bytes, CodecError> encode(const Packet& pkt) {
  if (pkt.qos != 0) return CodecError::BadQos;

  Bytes body;
  uint8_t flags = 0;
  switch (pkt.kind) {
    case PacketKind::Connect:
      put_str(body, "MQTT");
      body.push_back(4);     // protocol level
      body.push_back(0x02);  // clean session
      put_u16(body, 60);     // keepalive
      put_str(body, pkt.topic.value_or(""));
      break;
    case PacketKind::Connack:
      body.push_back(0);
      body.push_back(0);  // accepted
      break;
    case PacketKind::Publish:
      if (!pkt.topic) return CodecError::MissingTopic;
      put_str(body, *pkt.topic);
      if (pkt.payload) body.insert(body.end(), pkt.payload->begin(), pkt.payload->end());
      break;
    case PacketKind::Subscribe:
      if (!pkt.topic) return CodecError::MissingTopic;
      flags = 0x2;
      put_u16(body, pkt.packet_id.value_or(1));
      put_str(body, *pkt.topic);
      body.push_back(0);  // requested qos
      break;
    case PacketKind::Suback:
      put_u16(body, pkt.packet_id.value_or(1));
      body.push_back(0);  // granted qos 0
      break;
    case PacketKind::Pingreq:
    case PacketKind::Pingresp:
    case PacketKind::Disconnect:
      break;
  }

  Bytes out;
  out.push_back(static_cast<uint8_t>((static_cast<uint8_t>(pkt.kind) << 4) | flags));
  put_varint(out, body.size());
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

Expected<Packet, CodecError> decode(const Bytes& frame) {
  if (frame.size() < 2) return CodecError::Truncated;

  uint8_t type = frame[0] >> 4;
  switch (type) {
    case 1: case 2: case 3: case 8: case 9: case 12: case 13: case 14:
      break;
    default:
      return CodecError::UnknownPacketType;
  }

  size_t remaining = 0;
  size_t idx = 1;
  uint32_t mult = 1;
  while (true) {
    if (idx >= frame.size()) return CodecError::Truncated;
    uint8_t b = frame[idx++];
    remaining += static_cast<size_t>(b & 0x7F) * mult;
    if (!(b & 0x80)) break;
    mult *= 128;
    if (mult > 128u * 128u * 128u) return CodecError::RemainingLengthOverrun;
  }
  if (idx + remaining > frame.size()) return CodecError::RemainingLengthOverrun;

  Packet pkt;
  pkt.kind = static_cast<PacketKind>(type);
  Reader r{frame, idx, idx + remaining};
  switch (pkt.kind) {
    case PacketKind::Connect: {
      std::string proto = r.str();
      r.u8();  // level
      r.u8();  // flags
      r.u16(); // keepalive
      pkt.topic = r.str();
      break;
    }
    case PacketKind::Connack:
      r.u8();
      r.u8();
      break;
    case PacketKind::Publish: {
      pkt.topic = r.str();
      if (!r.fail) pkt.payload = r.rest();
      break;
    }
    case PacketKind::Subscribe:
      pkt.packet_id = r.u16();
      pkt.topic = r.str();
      r.u8();  // requested qos
      break;
    case PacketKind::Suback:
      pkt.packet_id = r.u16();
      r.u8();
      break;
    case PacketKind::Pingreq:
    case PacketKind::Pingresp:
    case PacketKind::Disconnect:
      break;
  }
  if (r.fail) return CodecError::Truncated;
  return pkt;
}

bool topic_matches(const std::string& filter, const std::string& topic) {
  std::vector<std::string> f, t;
  auto split = [](const std::string& s, std::vector<std::string>& out) {
    std::stringstream ss(s);
    std::string seg;
    while (std::getline(ss, seg, '/')) out.push_back(seg);
  };
  split(filter, f);
  split(topic, t);
  size_t i = 0;
  for (; i < f.size(); ++i) {
    if (f[i] == "#") return true;
    if (i >= t.size()) return false;
    if (f[i] != "+" && f[i] != t[i]) return false;
  }
  return i == t.size();
}

}  // namespace apiot::mqtt
