#include "csiscope/bridge.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstring>

#include "csiscope/error.hpp"

extern char **environ;

namespace csiscope {
namespace {

void AppendNumber(std::string &out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

void AppendNumber(std::string &out, std::uint64_t v) {
  char buf[24];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

template <typename T>
bool ParseField(std::string_view text, T &out) {
  if (text.empty()) return false;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  return res.ec == std::errc() && res.ptr == text.data() + text.size();
}

std::vector<std::string_view> Split(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) return fields;
    start = comma + 1;
  }
}

std::string_view StripCr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

bool WriteAll(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

void IgnoreSigpipe() {
  // Writes to a dead child must surface as EPIPE, not kill the host.
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

}  // namespace

std::string FormatFrameLine(const ProcessedFrame &frame, bool with_phases) {
  const auto &m = frame.meta();
  std::string line = "F,";
  line.reserve(64 + 24 * frame.polar.amplitudes.size() * (with_phases ? 2 : 1));
  AppendNumber(line, m.timestamp_us);
  line += ',';
  line += m.source_mac.ToHex12();
  line += ',';
  AppendNumber(line, frame.polar.rssi_smoothed_dbm);
  for (const double a : frame.polar.amplitudes) {
    line += ',';
    AppendNumber(line, a);
  }
  if (with_phases) {
    for (const double p : frame.polar.phases) {
      line += ',';
      AppendNumber(line, p);
    }
  }
  line += '\n';
  return line;
}

std::optional<FrameLine> ParseFrameLine(std::string_view line) {
  const auto fields = Split(StripCr(line));
  if (fields.size() < 5 || fields[0] != "F") return std::nullopt;
  FrameLine out;
  const auto mac = MacAddress::Parse(fields[2]);
  if (!ParseField(fields[1], out.timestamp_us) || !mac || !ParseField(fields[3], out.rssi_dbm)) return std::nullopt;
  out.mac = *mac;
  out.values.resize(fields.size() - 4);
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    if (!ParseField(fields[4 + i], out.values[i])) return std::nullopt;
  }
  return out;
}

std::string FormatResultLine(const ClassificationResult &result) {
  std::string line = "R,";
  AppendNumber(line, static_cast<std::uint64_t>(result.class_id));
  line += ',';
  AppendNumber(line, result.confidence);
  line += ',';
  AppendNumber(line, result.window_end_us);
  line += '\n';
  return line;
}

std::optional<ClassificationResult> ParseResultLine(std::string_view line) {
  const auto fields = Split(StripCr(line));
  if (fields.size() != 4 || fields[0] != "R") return std::nullopt;
  ClassificationResult r;
  if (!ParseField(fields[1], r.class_id) || r.class_id < 0) return std::nullopt;
  if (!ParseField(fields[2], r.confidence) || !std::isfinite(r.confidence) || r.confidence < 0.0 ||
      r.confidence > 1.0) {
    return std::nullopt;
  }
  if (!ParseField(fields[3], r.window_end_us)) return std::nullopt;
  return r;
}

ClassifierBridge::ClassifierBridge(const std::string &command, const std::vector<std::string> &args,
                                   BridgeOptions options)
    : options_(options), queue_(options.queue_depth, options.overflow) {
  IgnoreSigpipe();
  int in_pipe[2], out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw Error(ErrorCode::kSpawnFailed, std::strerror(errno));
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw Error(ErrorCode::kSpawnFailed, std::strerror(errno));
  }

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);
  posix_spawnattr_t attr;
  posix_spawnattr_init(&attr);
  sigset_t defaults;
  sigemptyset(&defaults);
  sigaddset(&defaults, SIGPIPE);
  posix_spawnattr_setsigdefault(&attr, &defaults);
  posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETSIGDEF);

  std::vector<char *> argv;
  argv.push_back(const_cast<char *>(command.c_str()));
  for (const auto &a : args) argv.push_back(const_cast<char *>(a.c_str()));
  argv.push_back(nullptr);

  const int rc = ::posix_spawnp(&pid_, command.c_str(), &actions, &attr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  posix_spawnattr_destroy(&attr);
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  if (rc != 0) {
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    pid_ = -1;
    throw Error(ErrorCode::kSpawnFailed, command + ": " + std::strerror(rc));
  }
  stdin_fd_ = in_pipe[1];
  stdout_fd_ = out_pipe[0];
  writer_ = std::thread([this] { WriterLoop(); });
  reader_ = std::thread([this] { ReaderLoop(); });
}

ClassifierBridge::~ClassifierBridge() {
  CloseInput();
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(200);
  while (!Reap(false) && std::chrono::steady_clock::now() < deadline) {
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  Kill();
  stopping_ = true;
  if (writer_.joinable()) writer_.join();
  if (reader_.joinable()) reader_.join();
  if (stdout_fd_ >= 0) ::close(stdout_fd_);
}

void ClassifierBridge::WriterLoop() {
  while (auto line = queue_.Pop()) {
    if (!WriteAll(stdin_fd_, *line)) {
      input_broken_ = true;
      queue_.Close();
      break;
    }
    ++frames_sent_;
  }
  ::close(stdin_fd_);
}

void ClassifierBridge::ReaderLoop() {
  std::string pending;
  bool discarding = false;
  char buf[8192];
  while (true) {
    pollfd pfd{stdout_fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, 50);
    if (ready < 0 && errno != EINTR) break;
    if (ready <= 0) {
      if (stopping_) break;
      continue;
    }
    const ssize_t n = ::read(stdout_fd_, buf, sizeof buf);
    if (n < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (n == 0) break;
    std::string_view chunk(buf, static_cast<std::size_t>(n));
    while (!chunk.empty()) {
      const auto nl = chunk.find('\n');
      if (nl == std::string_view::npos) {
        if (!discarding) {
          pending.append(chunk);
          if (pending.size() > options_.max_line_bytes) {
            ++malformed_;
            pending.clear();
            discarding = true;
          }
        }
        break;
      }
      if (discarding) {
        discarding = false;
      } else {
        pending.append(chunk.substr(0, nl));
        ConsumeLine(pending);
      }
      pending.clear();
      chunk.remove_prefix(nl + 1);
    }
  }
  // An unterminated tail at end of stream will never complete.
  if (!pending.empty() && !discarding) ++malformed_;
  output_done_ = true;
}

void ClassifierBridge::ConsumeLine(std::string_view line) {
  if (line.size() > options_.max_line_bytes) {
    ++malformed_;
    return;
  }
  if (auto r = ParseResultLine(line)) {
    std::lock_guard lock(results_mu_);
    results_.push_back(*r);
    ++results_received_;
  } else {
    ++malformed_;
  }
}

bool ClassifierBridge::Reap(bool block) {
  std::lock_guard lock(reap_mu_);
  if (exit_status_) return true;
  if (pid_ <= 0) return true;
  int status = 0;
  pid_t r;
  do {
    r = ::waitpid(pid_, &status, block ? 0 : WNOHANG);
  } while (r < 0 && errno == EINTR);
  if (r == pid_ || (r < 0 && errno == ECHILD)) {
    exit_status_ = r == pid_ ? status : -1;
    return true;
  }
  return false;
}

void ClassifierBridge::SendFrame(const ProcessedFrame &frame) {
  if (input_broken_ || !alive()) throw Error(ErrorCode::kBrokenPipe, "classifier is not running");
  if (!queue_.Push(FormatFrameLine(frame, options_.with_phases))) {
    throw Error(ErrorCode::kBrokenPipe, "classifier input is closed");
  }
}

std::vector<ClassificationResult> ClassifierBridge::PollResults() {
  Reap(false);
  std::lock_guard lock(results_mu_);
  std::vector<ClassificationResult> out;
  out.swap(results_);
  return out;
}

void ClassifierBridge::CloseInput() { queue_.Close(); }

bool ClassifierBridge::WaitExit(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (!(Reap(false) && output_done_)) {
    if (std::chrono::steady_clock::now() >= deadline) return false;
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  return true;
}

void ClassifierBridge::Kill() {
  if (Reap(false)) return;
  ::kill(pid_, SIGTERM);
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(500);
  while (!Reap(false)) {
    if (std::chrono::steady_clock::now() >= deadline) {
      ::kill(pid_, SIGKILL);
      Reap(true);
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  queue_.Close();
}

bool ClassifierBridge::alive() { return !Reap(false); }

std::optional<int> ClassifierBridge::exit_status() const {
  std::lock_guard lock(reap_mu_);
  return exit_status_;
}

}  // namespace csiscope
