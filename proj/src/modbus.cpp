#include "apiot/modbus.hpp"

namespace apiot::modbus {

Expected<Bytes, EncodeError> encode(const Adu& adu,
                                    std::optional<uint16_t> declared_length_override) {
  if (!adu.function_code) return EncodeError::MissingFunctionCode;
  if (adu.data.size() > 252) return EncodeError::DataTooLong;

  uint16_t length = declared_length_override
                        ? *declared_length_override
                        : static_cast<uint16_t>(2 + adu.data.size());
  Bytes out;
  put_u16(out, adu.transaction_id);
  put_u16(out, adu.protocol_id);
  put_u16(out, length);
  out.push_back(adu.unit_id);
  out.push_back(*adu.function_code);
  out.insert(out.end(), adu.data.begin(), adu.data.end());
  return out;
}

Expected<Adu, ParseError> decode(const Bytes& frame) {
  if (frame.size() < 8) return ParseError{ParseErrorKind::Truncated};

  Adu adu;
  adu.transaction_id = get_u16(frame, 0);
  adu.protocol_id = get_u16(frame, 2);
  adu.declared_length = get_u16(frame, 4);
  if (adu.declared_length < 2) return ParseError{ParseErrorKind::LengthMismatch};
  adu.unit_id = frame[6];
  adu.function_code = frame[7];
  adu.data.assign(frame.begin() + 8, frame.end());
  adu.actual_body_length = static_cast<uint16_t>(frame.size() - 6);
  return adu;
}

}  // namespace apiot::modbus
