#include "csiscope/wire_codec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "csiscope/bytes.hpp"
#include "csiscope/error.hpp"

namespace csiscope {

namespace {

constexpr std::uint8_t kMagic[4] = {'W', 'E', 'F', '1'};

}  // namespace

std::int16_t QuantizeSample(double value) {
  const double rounded = std::round(value);
  const double clamped = std::clamp(rounded, static_cast<double>(std::numeric_limits<std::int16_t>::min()),
                                    static_cast<double>(std::numeric_limits<std::int16_t>::max()));
  return static_cast<std::int16_t>(clamped);
}

std::vector<std::uint8_t> EncodeWireFrame(const CsiFrame &frame) {
  const auto report = ValidateFrame(frame);
  if (!report.ok()) {
    throw Error(ErrorCode::kInvalidFrame, report.Summary());
  }
  const std::size_t n = frame.csi.size();
  std::vector<std::uint8_t> out;
  out.reserve(WireFrameSize(n));
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  out.push_back(kWireVersion);
  out.push_back(static_cast<std::uint8_t>(static_cast<std::int8_t>(frame.rssi_dbm)));
  out.insert(out.end(), frame.source_mac.bytes.begin(), frame.source_mac.bytes.end());
  bytes::PutU16Le(out, frame.seq);
  bytes::PutU16Le(out, static_cast<std::uint16_t>(n));
  bytes::PutU64Le(out, frame.timestamp_us);
  for (const auto &s : frame.csi) {
    bytes::PutI16Le(out, QuantizeSample(s.re));
    bytes::PutI16Le(out, QuantizeSample(s.im));
  }
  return out;
}

bool LooksLikeWireFrame(std::span<const std::uint8_t> buf) {
  return buf.size() >= 4 && std::equal(std::begin(kMagic), std::end(kMagic), buf.begin());
}

CsiFrame ParseWireFrame(std::span<const std::uint8_t> buf) {
  if (buf.size() < 4) {
    throw Error(ErrorCode::kTruncatedFrame, "buffer shorter than magic");
  }
  if (!LooksLikeWireFrame(buf)) {
    throw Error(ErrorCode::kBadMagic, "expected WEF1");
  }
  if (buf.size() < kWireHeaderSize) {
    throw Error(ErrorCode::kTruncatedFrame,
                "header needs 24 bytes, got " + std::to_string(buf.size()));
  }
  if (buf[4] != kWireVersion) {
    throw Error(ErrorCode::kBadFieldRange, "unsupported version " + std::to_string(buf[4]));
  }
  const std::size_t n = bytes::ReadU16Le(buf, 14);
  if (buf.size() != WireFrameSize(n)) {
    throw Error(ErrorCode::kTruncatedFrame, "N=" + std::to_string(n) + " needs " +
                                                std::to_string(WireFrameSize(n)) + " bytes, got " +
                                                std::to_string(buf.size()));
  }
  const int bandwidth = BandwidthForSubcarriers(n);
  if (bandwidth == 0) {
    throw Error(ErrorCode::kBadFieldRange, "unsupported subcarrier count " + std::to_string(n));
  }
  const int rssi = static_cast<std::int8_t>(buf[5]);
  if (rssi < kMinRssiDbm || rssi > kMaxRssiDbm) {
    throw Error(ErrorCode::kBadFieldRange, "rssi " + std::to_string(rssi) + " dBm");
  }

  CsiFrame frame;
  frame.rssi_dbm = rssi;
  std::copy_n(buf.begin() + 6, 6, frame.source_mac.bytes.begin());
  frame.seq = bytes::ReadU16Le(buf, 12);
  frame.timestamp_us = bytes::ReadU64Le(buf, 16);
  frame.bandwidth_mhz = bandwidth;
  frame.subcarrier_order = SubcarrierOrder::kFft;
  frame.csi.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t off = kWireHeaderSize + 4 * i;
    frame.csi[i] = {static_cast<double>(bytes::ReadI16Le(buf, off)),
                    static_cast<double>(bytes::ReadI16Le(buf, off + 2))};
  }
  return frame;
}

}  // namespace csiscope
