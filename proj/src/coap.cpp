#include "apiot/coap.hpp"

namespace apiot::coap {

const char* to_string(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::Truncated: return "truncated";
    case ParseErrorKind::ReservedNibble: return "reserved nibble";
    case ParseErrorKind::OptionOverrun: return "option overrun";
    case ParseErrorKind::BadVersion: return "bad version";
  }
  return "unknown";
}

namespace {

// Extended delta/length scheme: 0..12 inline, 13 -> one extra byte (+13),
// 14 -> two extra bytes (+269). The safe encoder never emits 15.
void put_extended(Bytes& out, uint32_t v) {
  if (v < 13) return;
  if (v < 269) {
    out.push_back(static_cast<uint8_t>(v - 13));
  } else {
    uint32_t e = v - 269;
    out.push_back(static_cast<uint8_t>(e >> 8));
    out.push_back(static_cast<uint8_t>(e & 0xFF));
  }
}

uint8_t nibble_for(uint32_t v) {
  if (v < 13) return static_cast<uint8_t>(v);
  if (v < 269) return 13;
  return 14;
}

}  // namespace

Expected<Bytes, EncodeError> encode(const Message& msg,
                                    const std::optional<RawOptionOverride>& override_opts) {
  if (msg.token.size() > 8) return EncodeError::TokenTooLong;
  for (size_t i = 1; i < msg.options.size(); ++i) {
    if (msg.options[i].number < msg.options[i - 1].number) return EncodeError::OptionsUnsorted;
  }

  Bytes out;
  out.push_back(static_cast<uint8_t>((msg.version << 6) |
                                     (static_cast<uint8_t>(msg.type) << 4) |
                                     (msg.token.size() & 0xF)));
  out.push_back(msg.code);
  put_u16(out, msg.message_id);
  out.insert(out.end(), msg.token.begin(), msg.token.end());

  if (override_opts) {
    out.insert(out.end(), override_opts->raw_option_bytes.begin(),
               override_opts->raw_option_bytes.end());
  } else {
    uint32_t prev = 0;
    for (const Option& opt : msg.options) {
      uint32_t delta = opt.number - prev;
      uint32_t len = static_cast<uint32_t>(opt.value.size());
      out.push_back(static_cast<uint8_t>((nibble_for(delta) << 4) | nibble_for(len)));
      put_extended(out, delta);
      put_extended(out, len);
      out.insert(out.end(), opt.value.begin(), opt.value.end());
      prev = opt.number;
    }
  }

  if (!msg.payload.empty()) {
    out.push_back(0xFF);
    out.insert(out.end(), msg.payload.begin(), msg.payload.end());
  }
  return out;
}

Expected<Message, ParseError> decode(const Bytes& frame) {
  if (frame.size() < 4) return ParseError{ParseErrorKind::Truncated};

  Message msg;
  uint8_t b0 = frame[0];
  msg.version = b0 >> 6;
  if (msg.version != 1) return ParseError{ParseErrorKind::BadVersion};
  msg.type = static_cast<MsgType>((b0 >> 4) & 0x3);
  uint8_t tkl = b0 & 0xF;
  if (tkl > 8) return ParseError{ParseErrorKind::ReservedNibble};
  msg.code = frame[1];
  msg.message_id = get_u16(frame, 2);

  size_t idx = 4;
  if (frame.size() < idx + tkl) return ParseError{ParseErrorKind::Truncated};
  msg.token.assign(frame.begin() + idx, frame.begin() + idx + tkl);
  idx += tkl;

  uint32_t number = 0;
  while (idx < frame.size()) {
    uint8_t b = frame[idx];
    if (b == 0xFF) {
      ++idx;
      if (idx == frame.size()) return ParseError{ParseErrorKind::Truncated};
      msg.payload.assign(frame.begin() + idx, frame.end());
      return msg;
    }
    ++idx;
    uint8_t dn = b >> 4;
    uint8_t ln = b & 0xF;
    bool reserved = false;
    bool overrun = false;
    uint32_t delta = 0;
    uint32_t len = 0;

    auto extend = [&](uint8_t nib, uint32_t& out_v) {
      if (nib == 15) {
        reserved = true;
      } else if (nib == 13) {
        if (idx + 1 > frame.size()) { overrun = true; return; }
        out_v = 13u + frame[idx];
        idx += 1;
      } else if (nib == 14) {
        if (idx + 2 > frame.size()) { overrun = true; return; }
        out_v = 269u + get_u16(frame, idx);
        idx += 2;
      } else {
        out_v = nib;
      }
    };
    extend(dn, delta);
    if (!overrun) extend(ln, len);
    if (!overrun && frame.size() - idx < len) overrun = true;
    // A declared extension past the end of the frame is the overflow class;
    // report it even when a reserved nibble is also present.
    if (overrun) return ParseError{ParseErrorKind::OptionOverrun};
    if (reserved) return ParseError{ParseErrorKind::ReservedNibble};

    number += delta;
    if (number > 0xFFFF) return ParseError{ParseErrorKind::OptionOverrun};
    Option opt;
    opt.number = static_cast<uint16_t>(number);
    opt.value.assign(frame.begin() + idx, frame.begin() + idx + len);
    idx += len;
    msg.options.push_back(std::move(opt));
  }
  return msg;
}

std::vector<Option> uri_path_options(const std::string& path) {
  std::vector<Option> opts;
  std::string seg;
  for (size_t i = 0; i <= path.size(); ++i) {
    if (i == path.size() || path[i] == '/') {
      if (!seg.empty()) {
        opts.push_back(Option{kOptUriPath, Bytes(seg.begin(), seg.end())});
        seg.clear();
      }
    } else {
      seg.push_back(path[i]);
    }
  }
  return opts;
}

std::string path_from_options(const Message& msg) {
  std::string path;
  for (const Option& opt : msg.options) {
    if (opt.number == kOptUriPath) {
      path.push_back('/');
      path.append(opt.value.begin(), opt.value.end());
    }
  }
  return path;
}

}  // namespace apiot::coap
