#pragma once

// FLOC1 line protocol.
//
//   FLOC1,<device_id>,<seq>,<timestamp>,<temp>,<ph>,<tds>,<floc>,<checksum>\n
//
// The checksum is the XOR of every payload byte (from the 'F' of FLOC1 up to
// the last byte of the floc field) written as two uppercase hex digits.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "floc/datamodel.hpp"

namespace floc::protocol {

inline constexpr std::string_view kMagic = "FLOC1";
inline constexpr std::size_t kFieldCount = 9;

enum class ErrorKind {
  BadMagic,
  FieldCount,
  ChecksumMismatch,
  NumericParse,
  InvalidDeviceId,
  InvalidFrame,
};

std::string_view to_string(ErrorKind k) noexcept;

class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(ErrorKind kind, std::string detail, std::string line,
                std::string field = {}, std::string expected = {}, std::string actual = {});

  ErrorKind kind() const noexcept { return kind_; }
  /// Offending field name for NumericParse / InvalidDeviceId.
  const std::string& field() const noexcept { return field_; }
  const std::string& line() const noexcept { return line_; }
  /// For ChecksumMismatch: computed and transmitted values.
  const std::string& expected() const noexcept { return expected_; }
  const std::string& actual() const noexcept { return actual_; }

 private:
  ErrorKind kind_;
  std::string field_;
  std::string line_;
  std::string expected_;
  std::string actual_;
};

std::uint8_t xor_fold(std::string_view payload) noexcept;
std::string checksum(std::string_view payload);

/// Parses one line. A trailing "\n" or "\r\n" is tolerated.
SensorFrame parse_frame(std::string_view line);

/// Canonical encoding, newline-terminated. temp/ph/tds are rendered with at
/// most one fractional digit, floc as the shortest round-trip decimal.
std::string encode_frame(const SensorFrame& frame);

/// Canonical rendering helpers, exposed for the simulator and tests.
std::string render_tenths(double v);
std::string render_shortest(double v);

}  // namespace floc::protocol
