#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "apiot/bytes.hpp"

namespace apiot::coap {

enum class MsgType : uint8_t { Con = 0, Non = 1, Ack = 2, Rst = 3 };

// code = class.detail packed as (class << 5) | detail
constexpr uint8_t kCodeEmpty = 0x00;
constexpr uint8_t kCodeGet = 0x01;
constexpr uint8_t kCodePost = 0x02;
constexpr uint8_t kCodeContent = 0x45;    // 2.05
constexpr uint8_t kCodeNotFound = 0x84;   // 4.04
constexpr uint8_t kCodeBadRequest = 0x80; // 4.00

constexpr uint16_t kOptUriPath = 11;

struct Option {
  uint16_t number = 0;
  Bytes value;
  bool operator==(const Option&) const = default;
};

struct Message {
  uint8_t version = 1;
  MsgType type = MsgType::Con;
  uint8_t code = kCodeGet;
  uint16_t message_id = 0;
  Bytes token;
  std::vector<Option> options;  // sorted by number, ascending
  Bytes payload;
  bool operator==(const Message&) const = default;
};

enum class ParseErrorKind { Truncated, ReservedNibble, OptionOverrun, BadVersion };

struct ParseError {
  ParseErrorKind kind;
};

enum class EncodeError { TokenTooLong, OptionsUnsorted };

// Raw bytes substituted verbatim for the encoded options region; the escape
// hatch for crafting malformed frames.
struct RawOptionOverride {
  Bytes raw_option_bytes;
};

const char* to_string(ParseErrorKind kind);

Expected<Bytes, EncodeError> encode(const Message& msg,
                                    const std::optional<RawOptionOverride>& override_opts = std::nullopt);

Expected<Message, ParseError> decode(const Bytes& frame);

// Convenience: Uri-Path options from a "/a/b" path.
std::vector<Option> uri_path_options(const std::string& path);
std::string path_from_options(const Message& msg);

}  // namespace apiot::coap
