#include "csiscope/pcap.hpp"

#include <array>

#include "csiscope/bytes.hpp"
#include "csiscope/error.hpp"

namespace csiscope {

namespace {

constexpr std::uint32_t kMagicMicros = 0xA1B2C3D4;
constexpr std::uint32_t kMagicNanos = 0xA1B23C4D;
constexpr std::uint32_t kMagicMicrosSwapped = 0xD4C3B2A1;
constexpr std::uint32_t kMagicNanosSwapped = 0x4D3CB2A1;

constexpr std::uint32_t kLinkEthernet = 1;
constexpr std::uint32_t kLinkRaw = 101;
constexpr std::uint32_t kLinkLinuxSll = 113;
constexpr std::uint32_t kLinkIpv4 = 228;

constexpr std::uint32_t kMaxRecordBytes = 256 * 1024;

std::uint32_t Swap32(std::uint32_t v) {
  return ((v & 0xff) << 24) | ((v & 0xff00) << 8) | ((v >> 8) & 0xff00) | (v >> 24);
}

bool ReadExact(std::istream &in, std::uint8_t *dst, std::size_t n, std::size_t &got) {
  in.read(reinterpret_cast<char *>(dst), static_cast<std::streamsize>(n));
  got = static_cast<std::size_t>(in.gcount());
  return got == n;
}

}  // namespace

PcapReader::PcapReader(std::istream &in, PcapReadOptions options)
    : in_(in), options_(std::move(options)) {
  std::array<std::uint8_t, 24> header{};
  std::size_t got = 0;
  if (!ReadExact(in_, header.data(), header.size(), got)) {
    throw Error(ErrorCode::kBadPcapMagic, "missing pcap global header");
  }
  const std::uint32_t magic = bytes::ReadU32Le(header, 0);
  switch (magic) {
    case kMagicMicros: break;
    case kMagicNanos: nanos_ = true; break;
    case kMagicMicrosSwapped: swapped_ = true; break;
    case kMagicNanosSwapped: swapped_ = true; nanos_ = true; break;
    default: throw Error(ErrorCode::kBadPcapMagic, "unrecognised pcap magic");
  }
  link_type_ = bytes::ReadU32Le(header, 20);
  if (swapped_) link_type_ = Swap32(link_type_);
}

std::optional<std::span<const std::uint8_t>> PcapReader::UdpPayload(
    std::span<const std::uint8_t> packet) const {
  std::size_t ip = 0;
  switch (link_type_) {
    case kLinkEthernet: {
      if (packet.size() < 14) return std::nullopt;
      std::size_t off = 12;
      std::uint16_t ethertype = bytes::ReadU16Be(packet, off);
      while (ethertype == 0x8100 || ethertype == 0x88a8) {
        off += 4;
        if (packet.size() < off + 2) return std::nullopt;
        ethertype = bytes::ReadU16Be(packet, off);
      }
      if (ethertype != 0x0800) return std::nullopt;
      ip = off + 2;
      break;
    }
    case kLinkLinuxSll:
      if (packet.size() < 16 || bytes::ReadU16Be(packet, 14) != 0x0800) return std::nullopt;
      ip = 16;
      break;
    case kLinkRaw:
    case kLinkIpv4:
      ip = 0;
      break;
    default:
      return std::nullopt;
  }
  if (packet.size() < ip + 20 || (packet[ip] >> 4) != 4) return std::nullopt;
  const std::size_t ihl = static_cast<std::size_t>(packet[ip] & 0x0f) * 4;
  if (ihl < 20 || packet[ip + 9] != 17) return std::nullopt;
  const std::size_t udp = ip + ihl;
  if (packet.size() < udp + 8) return std::nullopt;
  if (bytes::ReadU16Be(packet, udp + 2) != options_.csi_port) return std::nullopt;
  const std::size_t udp_len = bytes::ReadU16Be(packet, udp + 4);
  if (udp_len < 8 || udp + udp_len > packet.size()) {
    // Length mismatch on a CSI-port datagram: hand back an empty span so the
    // caller counts it as a corrupt record.
    return std::span<const std::uint8_t>{};
  }
  return packet.subspan(udp + 8, udp_len - 8);
}

std::optional<CsiFrame> PcapReader::Next() {
  while (!done_) {
    std::array<std::uint8_t, 16> rec_header{};
    std::size_t got = 0;
    if (!ReadExact(in_, rec_header.data(), rec_header.size(), got)) {
      if (got != 0) ++skipped_;
      done_ = true;
      break;
    }
    auto field = [&](std::size_t off) {
      const std::uint32_t v = bytes::ReadU32Le(rec_header, off);
      return swapped_ ? Swap32(v) : v;
    };
    const std::uint64_t ts_sec = field(0);
    const std::uint64_t ts_frac = field(4);
    const std::uint32_t incl_len = field(8);
    if (incl_len > kMaxRecordBytes) {
      // Record boundaries are lost; nothing after this point can be trusted.
      ++skipped_;
      done_ = true;
      break;
    }
    record_.resize(incl_len);
    if (!ReadExact(in_, record_.data(), incl_len, got)) {
      ++skipped_;
      done_ = true;
      break;
    }
    const auto payload = UdpPayload(record_);
    if (!payload) {
      ++ignored_;
      continue;
    }
    const std::uint64_t timestamp_us = ts_sec * 1'000'000 + (nanos_ ? ts_frac / 1000 : ts_frac);
    try {
      CsiFrame frame = LooksLikeWireFrame(*payload)
                           ? ParseWireFrame(*payload)
                           : ParseNexmonPayload(*payload, options_.layout);
      frame.timestamp_us = timestamp_us;
      return frame;
    } catch (const Error &) {
      ++skipped_;
    }
  }
  return std::nullopt;
}

PcapWriter::PcapWriter(std::ostream &out, std::uint16_t dst_port) : out_(out), dst_port_(dst_port) {
  std::vector<std::uint8_t> header;
  bytes::PutU32Le(header, kMagicMicros);
  bytes::PutU16Le(header, 2);
  bytes::PutU16Le(header, 4);
  bytes::PutU32Le(header, 0);
  bytes::PutU32Le(header, 0);
  bytes::PutU32Le(header, 65535);
  bytes::PutU32Le(header, kLinkEthernet);
  out_.write(reinterpret_cast<const char *>(header.data()), static_cast<std::streamsize>(header.size()));
}

void PcapWriter::WriteUdp(std::uint64_t timestamp_us, std::span<const std::uint8_t> payload) {
  std::vector<std::uint8_t> pkt;
  pkt.reserve(42 + payload.size());
  const std::uint8_t eth[14] = {0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0x02, 0x00,
                                0x00, 0x00, 0x00, 0x01, 0x08, 0x00};
  pkt.insert(pkt.end(), std::begin(eth), std::end(eth));
  const std::uint16_t ip_len = static_cast<std::uint16_t>(20 + 8 + payload.size());
  const std::uint8_t ip[20] = {0x45, 0x00, static_cast<std::uint8_t>(ip_len >> 8),
                               static_cast<std::uint8_t>(ip_len & 0xff), 0, 0, 0x40, 0, 64, 17, 0, 0,
                               10, 10, 10, 1, 255, 255, 255, 255};
  pkt.insert(pkt.end(), std::begin(ip), std::end(ip));
  const std::uint16_t udp_len = static_cast<std::uint16_t>(8 + payload.size());
  const std::uint8_t udp[8] = {0x15, 0x7c, static_cast<std::uint8_t>(dst_port_ >> 8),
                               static_cast<std::uint8_t>(dst_port_ & 0xff),
                               static_cast<std::uint8_t>(udp_len >> 8),
                               static_cast<std::uint8_t>(udp_len & 0xff), 0, 0};
  pkt.insert(pkt.end(), std::begin(udp), std::end(udp));
  pkt.insert(pkt.end(), payload.begin(), payload.end());

  std::vector<std::uint8_t> rec;
  bytes::PutU32Le(rec, static_cast<std::uint32_t>(timestamp_us / 1'000'000));
  bytes::PutU32Le(rec, static_cast<std::uint32_t>(timestamp_us % 1'000'000));
  bytes::PutU32Le(rec, static_cast<std::uint32_t>(pkt.size()));
  bytes::PutU32Le(rec, static_cast<std::uint32_t>(pkt.size()));
  out_.write(reinterpret_cast<const char *>(rec.data()), static_cast<std::streamsize>(rec.size()));
  out_.write(reinterpret_cast<const char *>(pkt.data()), static_cast<std::streamsize>(pkt.size()));
}

}  // namespace csiscope
