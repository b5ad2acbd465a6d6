#include <doctest.h>

#include <string>

#include "floc/protocol.hpp"
#include "floc/random.hpp"

using namespace floc;
using protocol::ErrorKind;
using protocol::ProtocolError;

namespace {

// Golden value computed with an independent byte-XOR script over the payload.
constexpr std::string_view kGoldenPayload = "FLOC1,TANK-A,1,1602998400,29.5,6.9,1.7,10";
constexpr std::string_view kGoldenLine = "FLOC1,TANK-A,1,1602998400,29.5,6.9,1.7,10,47\n";

const SensorFrame kRow2{"TANK-A", 1, 1602998400, {29.5, 6.9, 1.7, 10.0, std::nullopt}};

ErrorKind kind_of(std::string_view line) {
  try {
    protocol::parse_frame(line);
  } catch (const ProtocolError& e) {
    return e.kind();
  }
  FAIL("expected ProtocolError for: " << line);
  return ErrorKind::InvalidFrame;
}

}  // namespace

TEST_CASE("checksum is the XOR fold in two uppercase hex digits") {
  CHECK(protocol::checksum("") == "00");
  CHECK(protocol::checksum("A") == "41");
  CHECK(protocol::checksum("AB") == "03");
  CHECK(protocol::checksum(kGoldenPayload) == "47");
  CHECK(protocol::checksum("\x0a") == "0A");
}

TEST_CASE("parse_frame accepts the golden line") {
  const auto f = protocol::parse_frame(kGoldenLine);
  CHECK(f == kRow2);
  // newline optional at this layer, CRLF tolerated
  CHECK(protocol::parse_frame(kGoldenLine.substr(0, kGoldenLine.size() - 1)) == kRow2);
  CHECK(protocol::parse_frame(std::string(kGoldenPayload) + ",47\r\n") == kRow2);
}

TEST_CASE("parse_frame error kinds") {
  SUBCASE("checksum mismatch carries both values") {
    try {
      protocol::parse_frame(std::string(kGoldenPayload) + ",00");
      FAIL("no throw");
    } catch (const ProtocolError& e) {
      CHECK(e.kind() == ErrorKind::ChecksumMismatch);
      CHECK(e.expected() == "47");
      CHECK(e.actual() == "00");
      CHECK(std::string(e.what()).find("TANK-A") != std::string::npos);
    }
  }
  SUBCASE("non-numeric temp names the field") {
    try {
      protocol::parse_frame("FLOC1,TANK-A,1,1602998400,hot,6.9,1.7,10,XX");
      FAIL("no throw");
    } catch (const ProtocolError& e) {
      CHECK(e.kind() == ErrorKind::NumericParse);
      CHECK(e.field() == "temp");
    }
  }
  SUBCASE("field count") {
    CHECK(kind_of("FLOC1,TANK-A,1,1602998400,29.5,6.9,1.7,10") == ErrorKind::FieldCount);
    CHECK(kind_of("FLOC1,TANK-A,1,1602998400,29.5,6.9,1.7,10,47,99") == ErrorKind::FieldCount);
    CHECK(kind_of("") == ErrorKind::FieldCount);
  }
  SUBCASE("magic") {
    CHECK(kind_of("FLOC2,TANK-A,1,1602998400,29.5,6.9,1.7,10,47") == ErrorKind::BadMagic);
  }
  SUBCASE("lowercase hex is not canonical") {
    const auto line = std::string("FLOC1,T,1,1,1,1,1,1");
    const auto cs = protocol::checksum(line);
    std::string lower = cs;
    for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (lower != cs) CHECK(kind_of(line + "," + lower) == ErrorKind::ChecksumMismatch);
  }
  SUBCASE("grammar rejects signs, exponents and specials") {
    for (const char* temp : {"-1", "+1", "1e1", "nan", "inf", ".5", "5.", "0x1", " 1"}) {
      const auto payload = std::string("FLOC1,TANK-A,1,1,") + temp + ",7,1,1";
      CAPTURE(temp);
      CHECK(kind_of(payload + "," + protocol::checksum(payload)) == ErrorKind::NumericParse);
    }
  }
  SUBCASE("out-of-range values") {
    for (const char* line : {"FLOC1,TANK-A,1,1,60,7,1,1", "FLOC1,TANK-A,1,1,20,14.1,1,1"}) {
      const auto payload = std::string(line);
      CHECK(kind_of(payload + "," + protocol::checksum(payload)) == ErrorKind::NumericParse);
    }
    const auto big = std::string("FLOC1,TANK-A,18446744073709551616,1,20,7,1,1");
    CHECK(kind_of(big + "," + protocol::checksum(big)) == ErrorKind::NumericParse);
  }
  SUBCASE("device id") {
    const auto bad = std::string("FLOC1,TANK A,1,1,20,7,1,1");
    CHECK(kind_of(bad + "," + protocol::checksum(bad)) == ErrorKind::InvalidDeviceId);
    const auto empty = std::string("FLOC1,,1,1,20,7,1,1");
    CHECK(kind_of(empty + "," + protocol::checksum(empty)) == ErrorKind::InvalidDeviceId);
    const auto longest = std::string("FLOC1,") + std::string(32, 'a') + ",1,1,20,7,1,1";
    CHECK_NOTHROW(protocol::parse_frame(longest + "," + protocol::checksum(longest)));
    const auto too_long = std::string("FLOC1,") + std::string(33, 'a') + ",1,1,20,7,1,1";
    CHECK(kind_of(too_long + "," + protocol::checksum(too_long)) == ErrorKind::InvalidDeviceId);
  }
}

TEST_CASE("encode_frame produces the canonical golden line") {
  CHECK(protocol::encode_frame(kRow2) == kGoldenLine);

  SensorFrame f = kRow2;
  f.sample.temp = 30.0;
  f.sample.floc = 12.25;
  const auto line = protocol::encode_frame(f);
  CHECK(line.find(",30,") != std::string::npos);
  CHECK(line.find(",12.25,") != std::string::npos);

  f.sample.tds = 1.75;  // rounds to one fractional digit
  CHECK(protocol::parse_frame(protocol::encode_frame(f)).sample.tds == 1.8);
}

TEST_CASE("encode_frame rejects invalid frames") {
  SensorFrame f = kRow2;
  f.device_id = "TANK,A";
  CHECK_THROWS_AS(protocol::encode_frame(f), ProtocolError);
  try {
    protocol::encode_frame(f);
  } catch (const ProtocolError& e) {
    CHECK(e.kind() == ErrorKind::InvalidFrame);
  }
  f = kRow2;
  f.sample.ph = 15;
  CHECK_THROWS_AS(protocol::encode_frame(f), ProtocolError);
  f = kRow2;
  f.sample.temp = 59.97;  // valid, but renders as 60
  CHECK_THROWS_AS(protocol::encode_frame(f), ProtocolError);
}

TEST_CASE("render helpers") {
  CHECK(protocol::render_tenths(7.0) == "7");
  CHECK(protocol::render_tenths(6.94) == "6.9");
  CHECK(protocol::render_tenths(0.0) == "0");
  CHECK(protocol::render_tenths(-0.0) == "0");
  CHECK(protocol::render_shortest(10.0) == "10");
  CHECK(protocol::render_shortest(0.1) == "0.1");
  CHECK(protocol::render_shortest(160.0) == "160");
}

TEST_CASE("property: canonical frames round-trip and any byte flip is detected") {
  Rng rng(2024);
  for (int i = 0; i < 2000; ++i) {
    SensorFrame f;
    const auto len = 1 + rng.index(32);
    static constexpr std::string_view kAlphabet =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789_-";
    for (std::size_t k = 0; k < len; ++k) f.device_id.push_back(kAlphabet[rng.index(kAlphabet.size())]);
    f.seq = rng.next_u64();
    f.timestamp = rng.next_u64() >> rng.index(64);
    f.sample.temp = static_cast<double>(rng.index(600)) / 10.0;
    f.sample.ph = static_cast<double>(rng.index(141)) / 10.0;
    f.sample.tds = static_cast<double>(rng.index(100000)) / 10.0;
    f.sample.floc = static_cast<double>(rng.index(1000000)) / 100.0;
    const auto line = protocol::encode_frame(f);
    REQUIRE(protocol::parse_frame(line) == f);

    auto corrupted = line;
    const auto payload_len = line.size() - 4;
    const auto pos = rng.index(payload_len);
    corrupted[pos] = static_cast<char>(corrupted[pos] ^ static_cast<char>(1 + rng.index(255)));
    CHECK_THROWS_AS(protocol::parse_frame(corrupted), ProtocolError);
  }
}
