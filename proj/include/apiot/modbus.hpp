#pragma once

#include <cstdint>
#include <optional>

#include "apiot/bytes.hpp"

namespace apiot::modbus {

constexpr uint8_t kFcReadHolding = 0x03;
constexpr uint8_t kFcWriteSingle = 0x06;
constexpr uint8_t kFcWriteMultiple = 0x10;

struct Adu {
  uint16_t transaction_id = 0;
  uint16_t protocol_id = 0;
  // Length field as present on the wire (unit_id + function_code + data for a
  // well-formed ADU). decode() reports it verbatim next to the actual size.
  uint16_t declared_length = 0;
  uint8_t unit_id = 0;
  std::optional<uint8_t> function_code;
  Bytes data;
  uint16_t actual_body_length = 0;  // set by decode: bytes after the length field

  bool length_mismatch() const {
    return declared_length != actual_body_length;
  }
  bool operator==(const Adu&) const = default;
};

enum class ParseErrorKind { Truncated, LengthMismatch };
struct ParseError {
  ParseErrorKind kind;
};

enum class EncodeError { MissingFunctionCode, DataTooLong };

// 7-byte MBAP header + PDU. The override replaces the length field verbatim.
Expected<Bytes, EncodeError> encode(const Adu& adu,
                                    std::optional<uint16_t> declared_length_override = std::nullopt);

Expected<Adu, ParseError> decode(const Bytes& frame);

}  // namespace apiot::modbus
