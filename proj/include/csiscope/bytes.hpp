#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace csiscope::bytes {

// Little-endian field access. Callers check bounds first.

inline std::uint16_t ReadU16Le(std::span<const std::uint8_t> b, std::size_t off) {
  return static_cast<std::uint16_t>(b[off] | (b[off + 1] << 8));
}

inline std::uint16_t ReadU16Be(std::span<const std::uint8_t> b, std::size_t off) {
  return static_cast<std::uint16_t>((b[off] << 8) | b[off + 1]);
}

inline std::uint32_t ReadU32Le(std::span<const std::uint8_t> b, std::size_t off) {
  return static_cast<std::uint32_t>(b[off]) | (static_cast<std::uint32_t>(b[off + 1]) << 8) |
         (static_cast<std::uint32_t>(b[off + 2]) << 16) |
         (static_cast<std::uint32_t>(b[off + 3]) << 24);
}

inline std::uint64_t ReadU64Le(std::span<const std::uint8_t> b, std::size_t off) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[off + i]) << (8 * i);
  return v;
}

inline std::int16_t ReadI16Le(std::span<const std::uint8_t> b, std::size_t off) {
  return static_cast<std::int16_t>(ReadU16Le(b, off));
}

inline void PutU16Le(std::vector<std::uint8_t> &out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline void PutU32Le(std::vector<std::uint8_t> &out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void PutU64Le(std::vector<std::uint8_t> &out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void PutI16Le(std::vector<std::uint8_t> &out, std::int16_t v) {
  PutU16Le(out, static_cast<std::uint16_t>(v));
}

}  // namespace csiscope::bytes
