#include <doctest.h>

#include <sstream>

#include "csiscope/error.hpp"
#include "csiscope/nexmon.hpp"
#include "csiscope/pcap.hpp"
#include "csiscope/wire_codec.hpp"
#include "support/oracles.hpp"

using namespace csiscope;

namespace {

CsiFrame FrameOfSize(std::size_t n) {
  CsiFrame f;
  f.timestamp_us = 1'700'000'000'123'456ULL;
  f.source_mac = *MacAddress::Parse("aa:bb:cc:dd:ee:ff");
  f.seq = 4242;
  f.rssi_dbm = -57;
  f.bandwidth_mhz = BandwidthForSubcarriers(n);
  f.csi.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    f.csi[i] = {static_cast<double>(i) - 100.0, 3.0 * static_cast<double>(i)};
  }
  return f;
}

ErrorCode CodeOf(auto &&fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kInvalidFrame;
}

std::string ToStreamBytes(const std::vector<std::uint8_t> &b) { return {b.begin(), b.end()}; }

}  // namespace

TEST_CASE("WEF1 encoding sizes and magic") {
  const auto buf = EncodeWireFrame(FrameOfSize(64));
  CHECK(buf.size() == 280);
  CHECK(buf[0] == 0x57);
  CHECK(buf[1] == 0x45);
  CHECK(buf[2] == 0x46);
  CHECK(buf[3] == 0x31);
  CHECK(EncodeWireFrame(FrameOfSize(256)).size() == 1048);
}

TEST_CASE("WEF1 encoding matches the hand-built layout byte for byte") {
  const auto f = FrameOfSize(128);
  CHECK(EncodeWireFrame(f) == oracle::Wef1Bytes(f));
}

TEST_CASE("WEF1 round trip") {
  const auto f = FrameOfSize(64);
  const auto parsed = ParseWireFrame(EncodeWireFrame(f));
  CHECK(parsed == f);
  CHECK(parsed.csi.size() == 64);
  CHECK(parsed.subcarrier_order == SubcarrierOrder::kFft);
}

TEST_CASE("WEF1 parse errors") {
  auto buf = EncodeWireFrame(FrameOfSize(64));
  SUBCASE("bad magic") {
    std::fill_n(buf.begin(), 4, 'X');
    CHECK(CodeOf([&] { ParseWireFrame(buf); }) == ErrorCode::kBadMagic);
  }
  SUBCASE("truncated by one byte") {
    buf.resize(279);
    CHECK(CodeOf([&] { ParseWireFrame(buf); }) == ErrorCode::kTruncatedFrame);
  }
  SUBCASE("trailing garbage") {
    buf.push_back(0);
    CHECK(CodeOf([&] { ParseWireFrame(buf); }) == ErrorCode::kTruncatedFrame);
  }
  SUBCASE("declared N unsupported") {
    std::vector<std::uint8_t> small(buf.begin(), buf.begin() + 24);
    small[14] = 2;
    small[15] = 0;
    small.resize(24 + 8);
    CHECK(CodeOf([&] { ParseWireFrame(small); }) == ErrorCode::kBadFieldRange);
  }
  SUBCASE("positive rssi") {
    buf[5] = 5;
    CHECK(CodeOf([&] { ParseWireFrame(buf); }) == ErrorCode::kBadFieldRange);
  }
  SUBCASE("unknown version") {
    buf[4] = 2;
    CHECK(CodeOf([&] { ParseWireFrame(buf); }) == ErrorCode::kBadFieldRange);
  }
}

TEST_CASE("encoding rejects invalid frames") {
  auto f = FrameOfSize(64);
  f.rssi_dbm = 3;
  CHECK(CodeOf([&] { EncodeWireFrame(f); }) == ErrorCode::kInvalidFrame);
  f = FrameOfSize(64);
  f.csi.pop_back();
  CHECK(CodeOf([&] { EncodeWireFrame(f); }) == ErrorCode::kInvalidFrame);
}

TEST_CASE("quantization rounds half away from zero and saturates") {
  CHECK(QuantizeSample(1.5) == 2);
  CHECK(QuantizeSample(-1.5) == -2);
  CHECK(QuantizeSample(2.4) == 2);
  CHECK(QuantizeSample(1e9) == 32767);
  CHECK(QuantizeSample(-1e9) == -32768);
}

TEST_CASE("parsing never reads past the buffer at any truncation length") {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 3; ++rep) {
    const auto buf = EncodeWireFrame(oracle::RandomWireFrame(rng));
    for (std::size_t len = 0; len < buf.size(); ++len) {
      // Copy into an exact-size heap block so sanitizers would flag overreads.
      std::vector<std::uint8_t> prefix(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(len));
      CHECK_THROWS_AS(ParseWireFrame(prefix), Error);
    }
  }
}

TEST_CASE("firmware payload with 64 int16 pairs") {
  oracle::NexmonPayload p;
  for (int i = 0; i < 64; ++i) p.samples.push_back({static_cast<std::int16_t>(i * 7 - 200),
                                                     static_cast<std::int16_t>(-i)});
  const auto frame = ParseNexmonPayload(p.Bytes(), IngestLayout{}, 1234);
  CHECK(frame.csi.size() == 64);
  CHECK(frame.bandwidth_mhz == 20);
  CHECK(frame.rssi_dbm == p.rssi);
  CHECK(frame.seq == p.seq);
  CHECK(frame.timestamp_us == 1234);
  CHECK(frame.source_mac.bytes == p.mac);
  CHECK(frame.subcarrier_order == SubcarrierOrder::kFft);
  for (int i = 0; i < 64; ++i) {
    CHECK(frame.csi[i].re == p.samples[i].first);
    CHECK(frame.csi[i].im == p.samples[i].second);
  }
}

TEST_CASE("firmware payload errors") {
  oracle::NexmonPayload p;
  p.samples.resize(64);
  SUBCASE("CSI region not divisible by 4") {
    auto bytes = p.Bytes();
    bytes.push_back(0);
    CHECK(CodeOf([&] { ParseNexmonPayload(bytes, IngestLayout{}); }) == ErrorCode::kTruncatedFrame);
  }
  SUBCASE("80 MHz chanspec with 64 samples") {
    p.chanspec = 0x2000 | 42;
    // Expected N for the chanspec comes from the bandwidth table: 80 MHz -> 256.
    CHECK(SubcarriersForBandwidth(*ChanspecBandwidth(p.chanspec, IngestLayout{})) == 256);
    CHECK(CodeOf([&] { ParseNexmonPayload(p.Bytes(), IngestLayout{}); }) ==
          ErrorCode::kUnknownChanspec);
  }
  SUBCASE("unknown bandwidth bits") {
    p.chanspec = 0x2800;
    CHECK(CodeOf([&] { ParseNexmonPayload(p.Bytes(), IngestLayout{}); }) ==
          ErrorCode::kUnknownChanspec);
  }
  SUBCASE("short header") {
    auto bytes = p.Bytes();
    bytes.resize(10);
    CHECK(CodeOf([&] { ParseNexmonPayload(bytes, IngestLayout{}); }) == ErrorCode::kTruncatedFrame);
  }
  SUBCASE("40 MHz with 128 samples is fine") {
    p.chanspec = 0x1800 | 38;
    p.samples.resize(128);
    CHECK(ParseNexmonPayload(p.Bytes(), IngestLayout{}).bandwidth_mhz == 40);
  }
}

TEST_CASE("firmware layout offsets are configurable") {
  oracle::NexmonPayload p;
  p.samples.resize(64, {5, -5});
  auto bytes = p.Bytes();
  bytes.insert(bytes.begin(), {0xde, 0xad});  // two-byte prefix shifts every field
  IngestLayout layout;
  layout.magic_offset += 2;
  layout.rssi_offset += 2;
  layout.mac_offset += 2;
  layout.seq_offset += 2;
  layout.chanspec_offset += 2;
  layout.csi_offset += 2;
  const auto frame = ParseNexmonPayload(bytes, layout);
  CHECK(frame.csi.size() == 64);
  CHECK(frame.csi[10] == ComplexSample{5, -5});
  CHECK_THROWS_AS(ParseNexmonPayload(bytes, IngestLayout{}), Error);
}

TEST_CASE("pcap with three CSI packets") {
  oracle::PcapBuilder pcap;
  std::vector<CsiFrame> frames;
  std::mt19937_64 rng(3);
  for (std::uint32_t i = 0; i < 3; ++i) {
    auto f = oracle::RandomWireFrame(rng);
    f.timestamp_us = 0;
    frames.push_back(f);
    pcap.AddUdp(1'700'000'000 + i, 250'000 * i + 17, 5500, oracle::Wef1Bytes(f));
  }
  std::istringstream in(ToStreamBytes(pcap.bytes));
  PcapReader reader(in);
  for (std::uint32_t i = 0; i < 3; ++i) {
    auto got = reader.Next();
    REQUIRE(got);
    CHECK(got->timestamp_us == (1'700'000'000ULL + i) * 1'000'000ULL + 250'000 * i + 17);
    got->timestamp_us = 0;
    CHECK(*got == frames[i]);
  }
  CHECK_FALSE(reader.Next());
  CHECK(reader.skipped() == 0);
}

TEST_CASE("empty pcap yields nothing") {
  oracle::PcapBuilder pcap;
  std::istringstream in(ToStreamBytes(pcap.bytes));
  PcapReader reader(in);
  CHECK_FALSE(reader.Next());
}

TEST_CASE("pcap global header problems") {
  std::istringstream empty("");
  CHECK(CodeOf([&] { PcapReader r(empty); }) == ErrorCode::kBadPcapMagic);
  std::istringstream junk(std::string(24, 'x'));
  CHECK(CodeOf([&] { PcapReader r(junk); }) == ErrorCode::kBadPcapMagic);
}

TEST_CASE("corrupt record is skipped and counted") {
  oracle::PcapBuilder pcap;
  std::mt19937_64 rng(11);
  std::vector<std::size_t> offsets;
  for (std::uint32_t i = 0; i < 3; ++i) {
    offsets.push_back(pcap.AddUdp(100 + i, 0, 5500, oracle::Wef1Bytes(oracle::RandomWireFrame(rng))));
  }
  pcap.bytes[offsets[1]] = 'X';  // break the middle payload's magic
  std::istringstream in(ToStreamBytes(pcap.bytes));
  PcapReader reader(in);
  std::vector<std::uint64_t> ts;
  while (auto f = reader.Next()) ts.push_back(f->timestamp_us);
  CHECK(ts == std::vector<std::uint64_t>{100'000'000, 102'000'000});
  CHECK(reader.skipped() == 1);
}

TEST_CASE("pcap reader handles big-endian files, other ports and firmware payloads") {
  oracle::PcapBuilder pcap(/*big_endian=*/true);
  oracle::NexmonPayload p;
  p.samples.resize(64, {1, 2});
  pcap.AddUdp(5, 6, 5353, {1, 2, 3});
  pcap.AddUdp(7, 8, 5500, p.Bytes());
  std::istringstream in(ToStreamBytes(pcap.bytes));
  PcapReader reader(in);
  const auto f = reader.Next();
  REQUIRE(f);
  CHECK(f->timestamp_us == 7'000'008);
  CHECK(f->csi[0] == ComplexSample{1, 2});
  CHECK_FALSE(reader.Next());
  CHECK(reader.ignored() == 1);
  CHECK(reader.skipped() == 0);
}

TEST_CASE("truncated final pcap record counts as skipped") {
  oracle::PcapBuilder pcap;
  std::mt19937_64 rng(5);
  pcap.AddUdp(1, 0, 5500, oracle::Wef1Bytes(oracle::RandomWireFrame(rng)));
  pcap.AddUdp(2, 0, 5500, oracle::Wef1Bytes(oracle::RandomWireFrame(rng)));
  pcap.bytes.resize(pcap.bytes.size() - 10);
  std::istringstream in(ToStreamBytes(pcap.bytes));
  PcapReader reader(in);
  CHECK(reader.Next());
  CHECK_FALSE(reader.Next());
  CHECK(reader.skipped() == 1);
}

TEST_CASE("library pcap writer output is readable by the reader") {
  std::ostringstream out;
  PcapWriter writer(out);
  const auto f = FrameOfSize(64);
  writer.WriteFrame(f);
  std::istringstream in(out.str());
  PcapReader reader(in);
  const auto got = reader.Next();
  REQUIRE(got);
  CHECK(*got == f);
}
