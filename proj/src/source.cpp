#include "csiscope/source.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <thread>
#include <vector>

#include "csiscope/bounded_queue.hpp"
#include "csiscope/error.hpp"
#include "csiscope/pcap.hpp"
#include "csiscope/synth.hpp"
#include "csiscope/wire_codec.hpp"

namespace csiscope {

namespace {

constexpr std::uint64_t kDefaultSynthStartUs = 1'700'000'000'000'000ULL;

std::uint64_t WallClockUs() {
  return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::microseconds>(
                                        std::chrono::system_clock::now().time_since_epoch())
                                        .count());
}

double ParseDouble(const std::string &key, const std::string &value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception &) {
    throw Error(ErrorCode::kBadUri, "query " + key + "=" + value + " is not a number");
  }
}

std::uint64_t ParseU64(const std::string &key, const std::string &value) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(value, &used, 0);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception &) {
    throw Error(ErrorCode::kBadUri, "query " + key + "=" + value + " is not an integer");
  }
}

std::pair<std::string, std::uint16_t> SplitHostPort(const std::string &target) {
  const auto colon = target.rfind(':');
  std::string host = colon == std::string::npos ? target : target.substr(0, colon);
  std::uint16_t port = DefaultUdpPort();
  if (colon != std::string::npos && colon + 1 < target.size()) {
    const auto value = ParseU64("port", target.substr(colon + 1));
    if (value == 0 || value > 65535) throw Error(ErrorCode::kBadUri, "port out of range");
    port = static_cast<std::uint16_t>(value);
  }
  if (host.empty()) host = "0.0.0.0";
  return {host, port};
}

class UdpSource final : public FrameSource {
 public:
  UdpSource(SourceUri uri, const SourceOptions &options)
      : uri_(std::move(uri)), layout_(options.layout),
        queue_(options.udp_queue_depth, OverflowPolicy::kDropOldest) {
    const auto [host, port] = SplitHostPort(uri_.target);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
      throw Error(ErrorCode::kBadUri, "bad IPv4 address " + host);
    }
    fd_ = ::socket(AF_INET, SOCK_DGRAM | SOCK_CLOEXEC, 0);
    if (fd_ < 0) throw Error(ErrorCode::kBindFailed, std::strerror(errno));
    if (::bind(fd_, reinterpret_cast<const sockaddr *>(&addr), sizeof(addr)) != 0) {
      const int err = errno;
      ::close(fd_);
      throw Error(ErrorCode::kBindFailed, host + ":" + std::to_string(port) + ": " + std::strerror(err));
    }
    running_ = true;
    producer_ = std::thread([this] { ReceiveLoop(); });
  }

  ~UdpSource() override { Close(); }

  NextResult Next(std::chrono::milliseconds timeout) override {
    if (closed_) throw Error(ErrorCode::kSourceClosed, uri_.ToString());
    auto frame = queue_.PopFor(timeout);
    if (!frame) return {NextStatus::kTimeout, std::nullopt};
    return {NextStatus::kFrame, std::move(frame)};
  }

  void Close() override {
    if (closed_.exchange(true)) return;
    running_ = false;
    if (producer_.joinable()) producer_.join();
    queue_.Close();
    ::close(fd_);
  }

  [[nodiscard]] SourceStats stats() const override {
    return {frames_.load(), parse_errors_.load(), queue_.dropped()};
  }
  [[nodiscard]] const SourceUri &uri() const override { return uri_; }

 private:
  void ReceiveLoop() {
    std::vector<std::uint8_t> buf(65536);
    std::map<MacAddress, std::uint64_t> last_ts;
    while (running_) {
      pollfd pfd{fd_, POLLIN, 0};
      if (::poll(&pfd, 1, 50) <= 0) continue;
      const ssize_t got = ::recv(fd_, buf.data(), buf.size(), 0);
      if (got < 0) continue;
      const std::span<const std::uint8_t> datagram(buf.data(), static_cast<std::size_t>(got));
      try {
        CsiFrame frame;
        if (LooksLikeWireFrame(datagram)) {
          frame = ParseWireFrame(datagram);
        } else {
          frame = ParseNexmonPayload(datagram, layout_, WallClockUs());
          auto &prev = last_ts[frame.source_mac];
          frame.timestamp_us = std::max(frame.timestamp_us, prev);
          prev = frame.timestamp_us;
        }
        ++frames_;
        queue_.Push(std::move(frame));
      } catch (const Error &) {
        ++parse_errors_;
      }
    }
  }

  SourceUri uri_;
  IngestLayout layout_;
  BoundedQueue<CsiFrame> queue_;
  int fd_{-1};
  std::atomic<bool> running_{false};
  std::atomic<bool> closed_{false};
  std::atomic<std::size_t> frames_{0};
  std::atomic<std::size_t> parse_errors_{0};
  std::thread producer_;
};

class PcapSource final : public FrameSource {
 public:
  PcapSource(SourceUri uri, const SourceOptions &options) : uri_(std::move(uri)) {
    if (!std::filesystem::is_regular_file(uri_.target)) {
      throw Error(ErrorCode::kFileNotFound, uri_.target);
    }
    file_.open(uri_.target, std::ios::binary);
    if (!file_) throw Error(ErrorCode::kFileNotFound, uri_.target);
    PcapReadOptions read_options;
    read_options.layout = options.layout;
    if (auto it = uri_.query.find("port"); it != uri_.query.end()) {
      read_options.csi_port = static_cast<std::uint16_t>(ParseU64("port", it->second));
    }
    reader_.emplace(file_, read_options);
  }

  NextResult Next(std::chrono::milliseconds /*timeout*/) override {
    if (closed_) throw Error(ErrorCode::kSourceClosed, uri_.ToString());
    auto frame = reader_->Next();
    if (!frame) return {NextStatus::kEndOfStream, std::nullopt};
    if (uri_.rate_hz) {
      const auto period = std::chrono::microseconds(FramePeriodUs(*uri_.rate_hz));
      if (emitted_ == 0) start_ = std::chrono::steady_clock::now();
      std::this_thread::sleep_until(start_ + period * emitted_);
    }
    ++emitted_;
    return {NextStatus::kFrame, std::move(frame)};
  }

  void Close() override {
    closed_ = true;
    file_.close();
  }

  [[nodiscard]] SourceStats stats() const override {
    return {emitted_, reader_ ? reader_->skipped() : 0, 0};
  }
  [[nodiscard]] const SourceUri &uri() const override { return uri_; }

 private:
  SourceUri uri_;
  std::ifstream file_;
  std::optional<PcapReader> reader_;
  bool closed_{false};
  std::size_t emitted_{0};
  std::chrono::steady_clock::time_point start_{};
};

class SynthSource final : public FrameSource {
 public:
  explicit SynthSource(SourceUri uri) : uri_(std::move(uri)), profile_(ShippedProfile(uri_.target)) {
    for (const auto &[key, value] : uri_.query) {
      if (key == "seed") {
        profile_.rng_seed = ParseU64(key, value);
      } else if (key == "noise") {
        profile_.noise_sigma = ParseDouble(key, value);
      } else if (key == "jitter") {
        profile_.rssi_jitter_db = ParseDouble(key, value);
      } else if (key == "mode") {
        if (value != "offline" && value != "realtime") {
          throw Error(ErrorCode::kBadUri, "mode must be offline or realtime");
        }
        realtime_ = value == "realtime";
      } else if (key == "start_us") {
        start_us_ = ParseU64(key, value);
      } else if (key == "count") {
        limit_ = ParseU64(key, value);
      } else if (key == "mac") {
        const auto mac = MacAddress::Parse(value);
        if (!mac) throw Error(ErrorCode::kBadUri, "bad mac " + value);
        profile_.source_mac = *mac;
      } else if (key != "rate") {
        throw Error(ErrorCode::kBadUri, "unknown synth parameter " + key);
      }
    }
    if (uri_.rate_hz) profile_.frame_rate_hz = *uri_.rate_hz;
    ValidateProfile(profile_);
    if (!start_us_) start_us_ = realtime_ ? WallClockUs() : kDefaultSynthStartUs;
    period_us_ = FramePeriodUs(profile_.frame_rate_hz);
    wall_start_ = std::chrono::steady_clock::now();
  }

  NextResult Next(std::chrono::milliseconds timeout) override {
    if (closed_) throw Error(ErrorCode::kSourceClosed, uri_.ToString());
    if (limit_ && index_ >= *limit_) return {NextStatus::kEndOfStream, std::nullopt};
    if (realtime_) {
      const auto due = wall_start_ + std::chrono::microseconds(period_us_ * index_);
      const auto deadline = std::chrono::steady_clock::now() + timeout;
      if (due > deadline) {
        std::this_thread::sleep_until(deadline);
        return {NextStatus::kTimeout, std::nullopt};
      }
      std::this_thread::sleep_until(due);
    }
    CsiFrame frame = GenerateSyntheticFrame(profile_, *start_us_ + period_us_ * index_);
    frame.seq = static_cast<std::uint16_t>(index_ & 0xffff);
    ++index_;
    return {NextStatus::kFrame, std::move(frame)};
  }

  void Close() override { closed_ = true; }

  [[nodiscard]] SourceStats stats() const override { return {index_, 0, 0}; }
  [[nodiscard]] const SourceUri &uri() const override { return uri_; }

 private:
  SourceUri uri_;
  SynthProfile profile_;
  bool realtime_{false};
  bool closed_{false};
  std::optional<std::uint64_t> start_us_;
  std::optional<std::uint64_t> limit_;
  std::uint64_t period_us_{0};
  std::uint64_t index_{0};
  std::chrono::steady_clock::time_point wall_start_{};
};

}  // namespace

std::uint16_t DefaultUdpPort() {
  if (const char *env = std::getenv("CSISCOPE_UDP_PORT")) {
    char *end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0 && v <= 65535) return static_cast<std::uint16_t>(v);
  }
  return kDefaultCsiPort;
}

SourceUri SourceUri::Parse(std::string_view text) {
  const auto sep = text.find("://");
  if (sep == std::string_view::npos) throw Error(ErrorCode::kBadUri, std::string(text));
  SourceUri uri;
  const std::string_view scheme = text.substr(0, sep);
  if (scheme == "udp") {
    uri.scheme = SourceScheme::kUdp;
  } else if (scheme == "pcap") {
    uri.scheme = SourceScheme::kPcap;
  } else if (scheme == "synth") {
    uri.scheme = SourceScheme::kSynth;
  } else {
    throw Error(ErrorCode::kBadUri, "unknown scheme " + std::string(scheme));
  }
  std::string_view rest = text.substr(sep + 3);
  const auto q = rest.find('?');
  uri.target = std::string(rest.substr(0, q));
  if (q != std::string_view::npos) {
    std::string_view query = rest.substr(q + 1);
    while (!query.empty()) {
      const auto amp = query.find('&');
      const std::string_view pair = query.substr(0, amp);
      const auto eq = pair.find('=');
      if (eq == std::string_view::npos || eq == 0) {
        throw Error(ErrorCode::kBadUri, "malformed query item " + std::string(pair));
      }
      uri.query[std::string(pair.substr(0, eq))] = std::string(pair.substr(eq + 1));
      if (amp == std::string_view::npos) break;
      query.remove_prefix(amp + 1);
    }
  }
  if (auto it = uri.query.find("rate"); it != uri.query.end()) {
    uri.rate_hz = ParseDouble("rate", it->second);
    if (!(*uri.rate_hz > 0.0)) throw Error(ErrorCode::kBadUri, "rate must be positive");
  }
  if (uri.scheme != SourceScheme::kUdp && uri.target.empty()) {
    throw Error(ErrorCode::kBadUri, "missing target in " + std::string(text));
  }
  if (uri.scheme == SourceScheme::kUdp) SplitHostPort(uri.target);
  return uri;
}

std::string SourceUri::ToString() const {
  std::string out;
  switch (scheme) {
    case SourceScheme::kUdp: out = "udp://"; break;
    case SourceScheme::kPcap: out = "pcap://"; break;
    case SourceScheme::kSynth: out = "synth://"; break;
  }
  out += target;
  char sep = '?';
  for (const auto &[key, value] : query) {
    out += sep + key + "=" + value;
    sep = '&';
  }
  return out;
}

std::unique_ptr<FrameSource> OpenSource(const SourceUri &uri, const SourceOptions &options) {
  switch (uri.scheme) {
    case SourceScheme::kUdp: return std::make_unique<UdpSource>(uri, options);
    case SourceScheme::kPcap: return std::make_unique<PcapSource>(uri, options);
    case SourceScheme::kSynth: return std::make_unique<SynthSource>(uri);
  }
  throw Error(ErrorCode::kBadUri, uri.ToString());
}

}  // namespace csiscope
