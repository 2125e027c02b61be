#pragma once

#include <sys/types.h>

#include <atomic>
#include <chrono>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "csiscope/bounded_queue.hpp"
#include "csiscope/model.hpp"

namespace csiscope {

// Line protocol between the host and a classifier process:
//   host -> child  F,<timestamp_us>,<mac 12-hex>,<rssi>,<a_0>,...,<a_N-1>[,<p_0>,...]
//   child -> host  R,<class_id>,<confidence>,<window_end_us>
// Numbers use the shortest text that reads back to the same double.

std::string FormatFrameLine(const ProcessedFrame &frame, bool with_phases = false);

struct FrameLine {
  std::uint64_t timestamp_us{0};
  MacAddress mac;
  double rssi_dbm{0.0};
  std::vector<double> values;
};
/// Parses one line without its terminator; nullopt if malformed.
std::optional<FrameLine> ParseFrameLine(std::string_view line);

std::string FormatResultLine(const ClassificationResult &result);
/// class_id >= 0, confidence finite in [0, 1]. Trailing '\r' is tolerated.
std::optional<ClassificationResult> ParseResultLine(std::string_view line);

struct BridgeOptions {
  bool with_phases{false};
  std::size_t queue_depth{4096};
  /// Live sessions drop the oldest pending line; batch evaluation blocks.
  OverflowPolicy overflow{OverflowPolicy::kDropOldest};
  /// Longest accepted output line; longer ones are discarded as malformed.
  std::size_t max_line_bytes{1 << 16};
};

/// Runs a classifier executable with its stdin/stdout attached to the host.
/// A writer thread feeds queued frame lines, a reader thread collects output.
class ClassifierBridge {
 public:
  /// Throws Error(kSpawnFailed). The command is resolved through PATH.
  ClassifierBridge(const std::string &command, const std::vector<std::string> &args, BridgeOptions options = {});
  /// Closes stdin, gives the child a moment to exit, then terminates and reaps it.
  ~ClassifierBridge();
  ClassifierBridge(const ClassifierBridge &) = delete;
  ClassifierBridge &operator=(const ClassifierBridge &) = delete;

  /// Throws Error(kBrokenPipe) once the child is gone.
  void SendFrame(const ProcessedFrame &frame);
  /// Results from complete lines received so far. Never blocks.
  std::vector<ClassificationResult> PollResults();

  /// Signals end of input; the child sees EOF after pending lines are written.
  void CloseInput();
  /// Waits for the child to exit and its output to be drained.
  bool WaitExit(std::chrono::milliseconds timeout);
  /// Terminates the child. Idempotent.
  void Kill();

  [[nodiscard]] bool alive();
  [[nodiscard]] pid_t pid() const { return pid_; }
  [[nodiscard]] std::uint64_t frames_sent() const { return frames_sent_.load(); }
  [[nodiscard]] std::uint64_t results_received() const { return results_received_.load(); }
  [[nodiscard]] std::uint64_t malformed_lines() const { return malformed_.load(); }
  [[nodiscard]] std::size_t frames_dropped() const { return queue_.dropped(); }
  /// Exit status as from waitpid, once reaped.
  [[nodiscard]] std::optional<int> exit_status() const;

 private:
  void WriterLoop();
  void ReaderLoop();
  void ConsumeLine(std::string_view line);
  bool Reap(bool block);

  BridgeOptions options_;
  pid_t pid_{-1};
  int stdin_fd_{-1};
  int stdout_fd_{-1};
  BoundedQueue<std::string> queue_;
  std::atomic<bool> input_broken_{false};
  std::atomic<bool> output_done_{false};
  std::atomic<bool> stopping_{false};
  std::atomic<std::uint64_t> frames_sent_{0};
  std::atomic<std::uint64_t> results_received_{0};
  std::atomic<std::uint64_t> malformed_{0};

  std::mutex results_mu_;
  std::vector<ClassificationResult> results_;

  mutable std::mutex reap_mu_;
  std::optional<int> exit_status_;

  std::thread writer_;
  std::thread reader_;
};

}  // namespace csiscope
