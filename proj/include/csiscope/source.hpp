#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "csiscope/model.hpp"
#include "csiscope/nexmon.hpp"

namespace csiscope {

enum class SourceScheme { kUdp, kPcap, kSynth };

/// udp://[host]:[port]            live WEF1 or firmware datagrams
/// pcap://<path>[?rate=<hz>]      replay, as fast as possible without rate
/// synth://<profile>[?seed=..&mode=offline|realtime&rate=..&start_us=..&noise=..]
struct SourceUri {
  SourceScheme scheme{SourceScheme::kSynth};
  std::string target;
  std::optional<double> rate_hz;
  std::map<std::string, std::string> query;

  /// Throws Error(kBadUri).
  static SourceUri Parse(std::string_view text);
  [[nodiscard]] std::string ToString() const;
};

/// Port used by udp:// URIs that omit one: CSISCOPE_UDP_PORT or 5500.
std::uint16_t DefaultUdpPort();

struct SourceStats {
  std::size_t frames{0};
  std::size_t parse_errors{0};
  std::size_t dropped{0};
};

enum class NextStatus { kFrame, kEndOfStream, kTimeout };

struct NextResult {
  NextStatus status{NextStatus::kEndOfStream};
  std::optional<CsiFrame> frame;
};

class FrameSource {
 public:
  virtual ~FrameSource() = default;

  /// Throws Error(kSourceClosed) once closed. kTimeout leaves the source open.
  virtual NextResult Next(std::chrono::milliseconds timeout) = 0;
  virtual void Close() = 0;
  [[nodiscard]] virtual SourceStats stats() const = 0;
  [[nodiscard]] virtual const SourceUri &uri() const = 0;
};

struct SourceOptions {
  IngestLayout layout{};
  std::size_t udp_queue_depth{1024};
};

/// Throws Error(kBindFailed | kFileNotFound | kUnknownProfile | kBadPcapMagic | kBadUri).
std::unique_ptr<FrameSource> OpenSource(const SourceUri &uri, const SourceOptions &options = {});

}  // namespace csiscope
