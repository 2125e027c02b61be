#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace csiscope {

inline constexpr int kMinRssiDbm = -120;
inline constexpr int kMaxRssiDbm = 0;

struct MacAddress {
  std::array<std::uint8_t, 6> bytes{};

  /// "aa:bb:cc:dd:ee:ff"
  [[nodiscard]] std::string ToString() const;
  /// "aabbccddeeff"
  [[nodiscard]] std::string ToHex12() const;
  /// Accepts colon/dash separated or bare 12-hex forms, case-insensitive.
  static std::optional<MacAddress> Parse(std::string_view text);

  auto operator<=>(const MacAddress &) const = default;
};

struct ComplexSample {
  double re{0.0};
  double im{0.0};

  bool operator==(const ComplexSample &) const = default;
};

/// Hardware emits [0..N/2-1, -N/2..-1]; linear order is [-N/2..N/2-1].
enum class SubcarrierOrder { kFft, kLinear };

struct CsiFrame {
  std::uint64_t timestamp_us{0};
  MacAddress source_mac{};
  std::uint16_t seq{0};
  int rssi_dbm{0};
  int bandwidth_mhz{20};
  SubcarrierOrder subcarrier_order{SubcarrierOrder::kFft};
  std::vector<ComplexSample> csi;

  [[nodiscard]] std::size_t n_subcarriers() const { return csi.size(); }

  bool operator==(const CsiFrame &) const = default;
};

/// Header fields of a CsiFrame carried alongside derived data.
struct FrameMeta {
  std::uint64_t timestamp_us{0};
  MacAddress source_mac{};
  std::uint16_t seq{0};
  int rssi_dbm{0};
  int bandwidth_mhz{20};
  SubcarrierOrder subcarrier_order{SubcarrierOrder::kFft};
  std::size_t n_subcarriers{0};

  bool operator==(const FrameMeta &) const = default;
};

FrameMeta MetaOf(const CsiFrame &frame);

struct PolarFrame {
  FrameMeta meta;
  std::vector<double> amplitudes;
  std::vector<double> phases;
  double rssi_smoothed_dbm{0.0};
  std::vector<std::string> applied_plugins;
  /// Set when AGC compensation met an all-zero frame and passed it through.
  bool zero_power{false};

  bool operator==(const PolarFrame &) const = default;
};

/// Output of the preprocessing chain: the polar view plus the complex samples
/// after the structural steps (reorder, narrowing, nulling).
struct ProcessedFrame {
  PolarFrame polar;
  std::vector<ComplexSample> csi;

  [[nodiscard]] const FrameMeta &meta() const { return polar.meta; }

  bool operator==(const ProcessedFrame &) const = default;
};

struct ClassificationResult {
  int class_id{0};
  double confidence{0.0};
  std::uint64_t window_end_us{0};

  bool operator==(const ClassificationResult &) const = default;
};

/// Subcarrier count for a channel bandwidth (64 per 20 MHz), or 0 if unsupported.
std::size_t SubcarriersForBandwidth(int bandwidth_mhz);
/// Inverse of SubcarriersForBandwidth, or 0 if unsupported.
int BandwidthForSubcarriers(std::size_t n);

struct Violation {
  std::string rule;
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;

  [[nodiscard]] bool ok() const { return violations.empty(); }
  [[nodiscard]] bool Has(std::string_view rule) const;
  [[nodiscard]] std::string Summary() const;
};

/// Reports every violated frame invariant. Rule names: "subcarrier-count",
/// "bandwidth-mismatch", "rssi-range", "non-finite-sample", "timestamp-order".
/// Timestamp ordering is only checked when the previous timestamp of the same
/// source stream is supplied.
ValidationReport ValidateFrame(const CsiFrame &frame,
                               std::optional<std::uint64_t> previous_timestamp_us = std::nullopt);

}  // namespace csiscope
