#include "floc/protocol.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <vector>

namespace floc::protocol {

namespace {

constexpr char kHex[] = "0123456789ABCDEF";

std::string printable(std::string_view line) {
  std::string out;
  out.reserve(line.size());
  for (unsigned char c : line) {
    if (c >= 0x20 && c < 0x7f) {
      out.push_back(static_cast<char>(c));
    } else {
      out += "\\x";
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0xF]);
    }
  }
  return out;
}

std::string_view strip_eol(std::string_view line) {
  if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

std::vector<std::string_view> split_fields(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  return true;
}

std::optional<std::uint64_t> parse_u64(std::string_view s) {
  if (!all_digits(s)) return std::nullopt;
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return v;
}

// digits [ '.' digits ]
std::optional<double> parse_decimal(std::string_view s) {
  const auto dot = s.find('.');
  if (dot == std::string_view::npos) {
    if (!all_digits(s)) return std::nullopt;
  } else if (!all_digits(s.substr(0, dot)) || !all_digits(s.substr(dot + 1))) {
    return std::nullopt;
  }
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, std::chars_format::fixed);
  if (ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

bool is_checksum_text(std::string_view s) {
  if (s.size() != 2) return false;
  for (char c : s)
    if (!((c >= '0' && c <= '9') || (c >= 'A' && c <= 'F'))) return false;
  return true;
}

}  // namespace

std::string_view to_string(ErrorKind k) noexcept {
  switch (k) {
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::FieldCount: return "FieldCount";
    case ErrorKind::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorKind::NumericParse: return "NumericParse";
    case ErrorKind::InvalidDeviceId: return "InvalidDeviceId";
    case ErrorKind::InvalidFrame: return "InvalidFrame";
  }
  return "Unknown";
}

ProtocolError::ProtocolError(ErrorKind kind, std::string detail, std::string line,
                             std::string field, std::string expected, std::string actual)
    : std::runtime_error(std::string(to_string(kind)) + ": " + detail + " in line '" +
                         printable(line) + "'"),
      kind_(kind),
      field_(std::move(field)),
      line_(std::move(line)),
      expected_(std::move(expected)),
      actual_(std::move(actual)) {}

std::uint8_t xor_fold(std::string_view payload) noexcept {
  std::uint8_t acc = 0;
  for (unsigned char c : payload) acc ^= c;
  return acc;
}

std::string checksum(std::string_view payload) {
  const auto v = xor_fold(payload);
  return {kHex[v >> 4], kHex[v & 0xF]};
}

SensorFrame parse_frame(std::string_view raw) {
  const std::string_view line = strip_eol(raw);
  const auto fields = split_fields(line);
  const std::string owned(line);

  if (fields.size() != kFieldCount)
    throw ProtocolError(ErrorKind::FieldCount,
                        "expected 9 fields, got " + std::to_string(fields.size()), owned);
  if (fields[0] != kMagic) throw ProtocolError(ErrorKind::BadMagic, "unknown magic", owned);

  SensorFrame frame;
  if (!is_valid_device_id(fields[1]))
    throw ProtocolError(ErrorKind::InvalidDeviceId, "bad device_id", owned, "device_id");
  frame.device_id = std::string(fields[1]);

  auto numeric_error = [&](std::string_view name, std::string_view why) {
    return ProtocolError(ErrorKind::NumericParse, std::string(why) + " field " + std::string(name),
                         owned, std::string(name));
  };

  const auto seq = parse_u64(fields[2]);
  if (!seq) throw numeric_error("seq", "non-numeric");
  const auto ts = parse_u64(fields[3]);
  if (!ts) throw numeric_error("timestamp", "non-numeric");
  frame.seq = *seq;
  frame.timestamp = *ts;

  static constexpr std::array<std::string_view, 4> kNames{"temp", "ph", "tds", "floc"};
  std::array<double, 4> values{};
  for (std::size_t i = 0; i < 4; ++i) {
    const auto v = parse_decimal(fields[4 + i]);
    if (!v) throw numeric_error(kNames[i], "non-numeric");
    values[i] = *v;
  }
  frame.sample = WaterSample{values[0], values[1], values[2], values[3], std::nullopt};
  if (frame.sample.temp >= 60.0) throw numeric_error("temp", "out-of-range");
  if (frame.sample.ph > 14.0) throw numeric_error("ph", "out-of-range");

  const std::string_view transmitted = fields[8];
  const std::string_view payload = line.substr(0, line.size() - transmitted.size() - 1);
  const auto computed = checksum(payload);
  if (!is_checksum_text(transmitted) || transmitted != computed)
    throw ProtocolError(ErrorKind::ChecksumMismatch,
                        "computed " + computed + ", transmitted '" + printable(transmitted) + "'",
                        owned, {}, computed, std::string(transmitted));
  return frame;
}

std::string render_tenths(double v) {
  std::array<char, 512> buf{};
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v + 0.0,
                               std::chars_format::fixed, 1);
  if (ec != std::errc{}) throw std::runtime_error("render_tenths: value too large");
  std::string s(buf.data(), p);
  if (s.size() >= 2 && s.compare(s.size() - 2, 2, ".0") == 0) s.resize(s.size() - 2);
  if (s == "-0") s = "0";
  return s;
}

std::string render_shortest(double v) {
  std::array<char, 512> buf{};
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v + 0.0,
                               std::chars_format::fixed);
  if (ec != std::errc{}) throw std::runtime_error("render_shortest: value too large");
  return std::string(buf.data(), p);
}

std::string encode_frame(const SensorFrame& frame) {
  if (frame.device_id.find(',') != std::string::npos)
    throw ProtocolError(ErrorKind::InvalidFrame, "device_id contains a comma", frame.device_id);
  if (auto err = validate(frame))
    throw ProtocolError(ErrorKind::InvalidFrame, *err, frame.device_id);

  std::string payload;
  payload.reserve(80);
  payload += kMagic;
  payload += ',';
  payload += frame.device_id;
  payload += ',';
  payload += std::to_string(frame.seq);
  payload += ',';
  payload += std::to_string(frame.timestamp);
  payload += ',';
  const auto temp = render_tenths(frame.sample.temp);
  if (std::stod(temp) >= 60.0)
    throw ProtocolError(ErrorKind::InvalidFrame, "temp rounds out of range", frame.device_id);
  payload += temp;
  payload += ',';
  payload += render_tenths(frame.sample.ph);
  payload += ',';
  payload += render_tenths(frame.sample.tds);
  payload += ',';
  payload += render_shortest(frame.sample.floc);

  std::string line = payload;
  line += ',';
  line += checksum(payload);
  line += '\n';
  return line;
}

}  // namespace floc::protocol
