#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "csiscope/model.hpp"

namespace csiscope {

/// Byte layout of a firmware CSI payload. The defaults follow the Nexmon
/// BCM43455c0 UDP payload:
///   0-1 magic 0x1111 | 2 rssi i8 | 3 frame control | 4-9 source MAC
///   10-11 seq | 12-13 core/stream | 14-15 chanspec | 16-17 chip | 18.. CSI
/// with CSI as interleaved little-endian int16 (re, im). Offsets differ across
/// chips, so every field is configurable.
struct IngestLayout {
  std::optional<std::uint16_t> magic{0x1111};
  std::size_t magic_offset{0};
  std::size_t rssi_offset{2};
  std::size_t mac_offset{4};
  std::size_t seq_offset{10};
  std::size_t chanspec_offset{14};
  std::size_t csi_offset{18};
  std::uint16_t chanspec_bw_mask{0x3800};
  std::uint16_t chanspec_bw20{0x1000};
  std::uint16_t chanspec_bw40{0x1800};
  std::uint16_t chanspec_bw80{0x2000};
};

/// Bandwidth in MHz encoded by a chanspec, or nullopt if unknown.
std::optional<int> ChanspecBandwidth(std::uint16_t chanspec, const IngestLayout &layout);

/// Parses one firmware payload. N is inferred from the CSI region length and
/// must agree with the chanspec bandwidth. The capture host supplies the
/// timestamp. Throws Error(kTruncatedFrame | kUnknownChanspec | kBadMagic |
/// kBadFieldRange).
CsiFrame ParseNexmonPayload(std::span<const std::uint8_t> buf, const IngestLayout &layout,
                            std::uint64_t timestamp_us = 0);

}  // namespace csiscope
