#include "csiscope/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>

namespace csiscope {

std::string MacAddress::ToString() const {
  char buf[18];
  std::snprintf(buf, sizeof(buf), "%02x:%02x:%02x:%02x:%02x:%02x", bytes[0], bytes[1], bytes[2],
                bytes[3], bytes[4], bytes[5]);
  return buf;
}

std::string MacAddress::ToHex12() const {
  char buf[13];
  std::snprintf(buf, sizeof(buf), "%02x%02x%02x%02x%02x%02x", bytes[0], bytes[1], bytes[2],
                bytes[3], bytes[4], bytes[5]);
  return buf;
}

namespace {

int HexValue(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  const char lower = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower >= 'a' && lower <= 'f') return lower - 'a' + 10;
  return -1;
}

}  // namespace

std::optional<MacAddress> MacAddress::Parse(std::string_view text) {
  std::string digits;
  if (text.size() == 12) {
    digits = std::string(text);
  } else if (text.size() == 17) {
    const char sep = text[2];
    if (sep != ':' && sep != '-') return std::nullopt;
    for (std::size_t i = 0; i < text.size(); ++i) {
      if (i % 3 == 2) {
        if (text[i] != sep) return std::nullopt;
      } else {
        digits.push_back(text[i]);
      }
    }
  } else {
    return std::nullopt;
  }
  MacAddress mac;
  for (std::size_t i = 0; i < 6; ++i) {
    const int hi = HexValue(digits[2 * i]);
    const int lo = HexValue(digits[2 * i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    mac.bytes[i] = static_cast<std::uint8_t>(hi * 16 + lo);
  }
  return mac;
}

FrameMeta MetaOf(const CsiFrame &frame) {
  return FrameMeta{frame.timestamp_us,  frame.source_mac,       frame.seq,
                   frame.rssi_dbm,      frame.bandwidth_mhz,    frame.subcarrier_order,
                   frame.csi.size()};
}

std::size_t SubcarriersForBandwidth(int bandwidth_mhz) {
  switch (bandwidth_mhz) {
    case 20: return 64;
    case 40: return 128;
    case 80: return 256;
    default: return 0;
  }
}

int BandwidthForSubcarriers(std::size_t n) {
  switch (n) {
    case 64: return 20;
    case 128: return 40;
    case 256: return 80;
    default: return 0;
  }
}

bool ValidationReport::Has(std::string_view rule) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const Violation &v) { return v.rule == rule; });
}

std::string ValidationReport::Summary() const {
  std::string out;
  for (const auto &v : violations) {
    if (!out.empty()) out += "; ";
    out += v.rule + " (" + v.detail + ")";
  }
  return out;
}

ValidationReport ValidateFrame(const CsiFrame &frame,
                               std::optional<std::uint64_t> previous_timestamp_us) {
  ValidationReport report;
  const std::size_t n = frame.csi.size();
  if (BandwidthForSubcarriers(n) == 0) {
    report.violations.push_back({"subcarrier-count", "N=" + std::to_string(n)});
  } else if (SubcarriersForBandwidth(frame.bandwidth_mhz) != n) {
    report.violations.push_back({"bandwidth-mismatch", std::to_string(frame.bandwidth_mhz) +
                                                           " MHz with N=" + std::to_string(n)});
  }
  if (frame.rssi_dbm < kMinRssiDbm || frame.rssi_dbm > kMaxRssiDbm) {
    report.violations.push_back({"rssi-range", std::to_string(frame.rssi_dbm) + " dBm"});
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(frame.csi[i].re) || !std::isfinite(frame.csi[i].im)) {
      report.violations.push_back({"non-finite-sample", "index " + std::to_string(i)});
      break;
    }
  }
  if (previous_timestamp_us && frame.timestamp_us < *previous_timestamp_us) {
    report.violations.push_back({"timestamp-order", std::to_string(frame.timestamp_us) + " < " +
                                                        std::to_string(*previous_timestamp_us)});
  }
  return report;
}

}  // namespace csiscope
