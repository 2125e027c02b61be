#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "csiscope/model.hpp"

namespace csiscope {

/// WEF1 frame layout, little-endian:
///   0-3 "WEF1" | 4 version (1) | 5 rssi i8 | 6-11 source MAC | 12-13 seq u16
///   14-15 N u16 | 16-23 timestamp_us u64 | 24.. N x (re i16, im i16)
inline constexpr std::size_t kWireHeaderSize = 24;
inline constexpr std::uint8_t kWireVersion = 1;
inline constexpr std::uint16_t kDefaultCsiPort = 5500;

[[nodiscard]] constexpr std::size_t WireFrameSize(std::size_t n) { return kWireHeaderSize + 4 * n; }

/// Quantizes one component to the int16 wire representation: round half away
/// from zero, saturating at the int16 limits.
std::int16_t QuantizeSample(double value);

/// Throws Error(kInvalidFrame) if the frame fails ValidateFrame.
std::vector<std::uint8_t> EncodeWireFrame(const CsiFrame &frame);

/// Throws Error(kBadMagic | kTruncatedFrame | kBadFieldRange). The returned
/// frame is in FFT order with bandwidth derived from N.
CsiFrame ParseWireFrame(std::span<const std::uint8_t> buf);

/// True if the buffer starts with the WEF1 magic.
bool LooksLikeWireFrame(std::span<const std::uint8_t> buf);

}  // namespace csiscope
