#include "csiscope/nexmon.hpp"

#include <algorithm>
#include <cstdio>
#include <string>

#include "csiscope/bytes.hpp"
#include "csiscope/error.hpp"

namespace csiscope {

std::optional<int> ChanspecBandwidth(std::uint16_t chanspec, const IngestLayout &layout) {
  const std::uint16_t bw = chanspec & layout.chanspec_bw_mask;
  if (bw == layout.chanspec_bw20) return 20;
  if (bw == layout.chanspec_bw40) return 40;
  if (bw == layout.chanspec_bw80) return 80;
  return std::nullopt;
}

CsiFrame ParseNexmonPayload(std::span<const std::uint8_t> buf, const IngestLayout &layout,
                            std::uint64_t timestamp_us) {
  const std::size_t header_end =
      std::max({layout.magic ? layout.magic_offset + 2 : 0, layout.rssi_offset + 1,
                layout.mac_offset + 6, layout.seq_offset + 2, layout.chanspec_offset + 2,
                layout.csi_offset});
  if (buf.size() < header_end) {
    throw Error(ErrorCode::kTruncatedFrame, "payload shorter than layout header (" +
                                                std::to_string(buf.size()) + " < " +
                                                std::to_string(header_end) + ")");
  }
  if (layout.magic && bytes::ReadU16Le(buf, layout.magic_offset) != *layout.magic) {
    throw Error(ErrorCode::kBadMagic, "payload magic mismatch");
  }
  const std::size_t csi_bytes = buf.size() - layout.csi_offset;
  if (csi_bytes % 4 != 0) {
    throw Error(ErrorCode::kTruncatedFrame,
                "CSI region of " + std::to_string(csi_bytes) + " bytes is not a whole sample count");
  }
  const std::size_t n = csi_bytes / 4;

  const std::uint16_t chanspec = bytes::ReadU16Le(buf, layout.chanspec_offset);
  const auto bandwidth = ChanspecBandwidth(chanspec, layout);
  if (!bandwidth) {
    char hex[8];
    std::snprintf(hex, sizeof(hex), "0x%04x", chanspec);
    throw Error(ErrorCode::kUnknownChanspec, std::string("chanspec ") + hex);
  }
  if (SubcarriersForBandwidth(*bandwidth) != n) {
    throw Error(ErrorCode::kUnknownChanspec, "chanspec says " + std::to_string(*bandwidth) +
                                                 " MHz but payload carries N=" + std::to_string(n));
  }
  const int rssi = static_cast<std::int8_t>(buf[layout.rssi_offset]);
  if (rssi < kMinRssiDbm || rssi > kMaxRssiDbm) {
    throw Error(ErrorCode::kBadFieldRange, "rssi " + std::to_string(rssi) + " dBm");
  }

  CsiFrame frame;
  frame.timestamp_us = timestamp_us;
  frame.rssi_dbm = rssi;
  std::copy_n(buf.begin() + static_cast<std::ptrdiff_t>(layout.mac_offset), 6,
              frame.source_mac.bytes.begin());
  frame.seq = bytes::ReadU16Le(buf, layout.seq_offset);
  frame.bandwidth_mhz = *bandwidth;
  frame.subcarrier_order = SubcarrierOrder::kFft;
  frame.csi.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t off = layout.csi_offset + 4 * i;
    frame.csi[i] = {static_cast<double>(bytes::ReadI16Le(buf, off)),
                    static_cast<double>(bytes::ReadI16Le(buf, off + 2))};
  }
  return frame;
}

}  // namespace csiscope
