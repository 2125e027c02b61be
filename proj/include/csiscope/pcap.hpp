#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "csiscope/model.hpp"
#include "csiscope/nexmon.hpp"
#include "csiscope/wire_codec.hpp"

namespace csiscope {

struct PcapReadOptions {
  std::uint16_t csi_port{kDefaultCsiPort};
  /// Used for UDP payloads that are not WEF1 frames.
  IngestLayout layout{};
};

/// Streams CSI frames out of a classic pcap capture. Each UDP/IPv4 datagram
/// to the CSI port is decoded as a WEF1 frame when it carries the WEF1 magic,
/// otherwise as a firmware payload. Frame timestamps are the pcap record
/// timestamps. Records that fail to decode are skipped and counted; other
/// traffic is ignored. Supports Ethernet, raw IPv4 and Linux cooked captures,
/// both byte orders and microsecond/nanosecond resolution.
class PcapReader {
 public:
  /// Throws Error(kBadPcapMagic) if the global header is missing or unknown.
  explicit PcapReader(std::istream &in, PcapReadOptions options = {});

  /// Next CSI frame in file order, or nullopt at end of capture.
  std::optional<CsiFrame> Next();

  [[nodiscard]] std::size_t skipped() const { return skipped_; }
  [[nodiscard]] std::size_t ignored() const { return ignored_; }
  [[nodiscard]] std::uint32_t link_type() const { return link_type_; }

 private:
  std::optional<std::span<const std::uint8_t>> UdpPayload(std::span<const std::uint8_t> packet) const;

  std::istream &in_;
  PcapReadOptions options_;
  bool swapped_{false};
  bool nanos_{false};
  std::uint32_t link_type_{0};
  std::size_t skipped_{0};
  std::size_t ignored_{0};
  bool done_{false};
  std::vector<std::uint8_t> record_;
};

/// Writes Ethernet/IPv4/UDP captures in little-endian microsecond pcap format.
class PcapWriter {
 public:
  explicit PcapWriter(std::ostream &out, std::uint16_t dst_port = kDefaultCsiPort);

  void WriteUdp(std::uint64_t timestamp_us, std::span<const std::uint8_t> payload);
  void WriteFrame(const CsiFrame &frame) { WriteUdp(frame.timestamp_us, EncodeWireFrame(frame)); }

 private:
  std::ostream &out_;
  std::uint16_t dst_port_;
};

}  // namespace csiscope
