#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>

#include "csiscope/bounded_queue.hpp"
#include "csiscope/model.hpp"

namespace csiscope {

enum class RecordingFormat { kCsvSimple, kCsvCompact, kBinary };

std::string_view FormatName(RecordingFormat format);
/// "csv-simple" | "csv-compact" | "binary"; throws Error(kUnsupportedFormat).
RecordingFormat ParseFormat(std::string_view name);

inline constexpr std::size_t kBinaryHeaderSize = 8;
[[nodiscard]] constexpr std::size_t BinaryRecordSize(std::size_t n) { return 17 + 4 * n; }

struct RecordingMeta {
  RecordingFormat format{RecordingFormat::kBinary};
  std::filesystem::path path;
  std::uint64_t started_us{0};
  std::uint64_t chain_version{0};
  std::optional<std::string> label;
  /// 0 until known; a writer opened with 0 takes N from its first frame.
  std::size_t n_subcarriers{0};
  SubcarrierOrder subcarrier_order{SubcarrierOrder::kLinear};
  std::uint64_t frames{0};
};

/// Sidecar metadata lives next to the data file as "<path>.json".
std::filesystem::path SidecarPath(const std::filesystem::path &path);

/// csv-simple: "timestamp_us,mac,seq,rssi_dbm,amp_0..,phase_0.." with values
///   printed to 6 significant digits.
/// csv-compact: "timestamp_us,mac,rssi_dbm,re_0,im_0,.." with the complex
///   samples as integers and a 12-hex MAC.
/// binary: "WEYR" | version u8 | N u16 | pad u8, then fixed records of
///   u64 ts | mac[6] | u16 seq | i8 rssi | N x (i16 re, i16 im), little-endian.
class RecordingWriter {
 public:
  /// Throws Error(kIoError) if the path cannot be opened for writing.
  RecordingWriter(const std::filesystem::path &path, RecordingMeta meta);
  ~RecordingWriter();
  RecordingWriter(const RecordingWriter &) = delete;
  RecordingWriter &operator=(const RecordingWriter &) = delete;

  /// Throws Error(kNMismatch | kIoError). Each record is handed to the stream
  /// in one write.
  void Append(const ProcessedFrame &frame);
  /// Flushes data and rewrites the sidecar. Idempotent.
  void Close();

  [[nodiscard]] const RecordingMeta &meta() const { return meta_; }

 private:
  void WriteHeader();
  void WriteSidecar() const;

  RecordingMeta meta_;
  std::ofstream out_;
  bool header_written_{false};
  bool closed_{false};
};

/// Streams frames back out of a recording. The format is detected from the
/// file contents; the sidecar is optional and fills in label, chain version
/// and subcarrier order.
///
/// Binary and csv-compact frames carry the stored complex samples with the
/// polar view derived from them; csv-simple frames carry the stored polar
/// view and no complex samples.
class RecordingReader {
 public:
  /// Throws Error(kFileNotFound | kBadHeader).
  explicit RecordingReader(const std::filesystem::path &path);

  /// nullopt at a clean end of file. After the last complete record of a cut
  /// file, throws Error(kTruncatedRecord).
  std::optional<ProcessedFrame> Next();

  [[nodiscard]] const RecordingMeta &meta() const { return meta_; }

 private:
  std::optional<ProcessedFrame> NextBinary();
  std::optional<ProcessedFrame> NextCsv();

  RecordingMeta meta_;
  std::ifstream in_;
  std::uint64_t record_index_{0};
};

/// Reads a whole recording; truncation errors propagate.
std::vector<ProcessedFrame> ReadAllFrames(const std::filesystem::path &path);

/// Background writer: frames are queued (blocking when full, never dropped)
/// and written by a dedicated thread.
class AsyncRecorder {
 public:
  static constexpr std::size_t kQueueDepth = 4096;

  AsyncRecorder(const std::filesystem::path &path, RecordingMeta meta);
  ~AsyncRecorder();
  AsyncRecorder(const AsyncRecorder &) = delete;
  AsyncRecorder &operator=(const AsyncRecorder &) = delete;

  /// Returns false once the recorder has stopped or failed.
  bool Push(ProcessedFrame frame);
  /// Drains the queue, closes the file and joins the writer. Returns the
  /// number of frames written. Idempotent.
  std::uint64_t Stop();

  [[nodiscard]] std::uint64_t frames_written() const { return written_.load(); }
  /// First write error, if any; later frames are discarded.
  [[nodiscard]] std::optional<std::string> error() const;
  [[nodiscard]] const std::filesystem::path &path() const { return path_; }

 private:
  void Run();

  std::filesystem::path path_;
  RecordingWriter writer_;
  BoundedQueue<ProcessedFrame> queue_{kQueueDepth, OverflowPolicy::kBlock};
  std::atomic<std::uint64_t> written_{0};
  mutable std::mutex error_mu_;
  std::optional<std::string> error_;
  std::thread thread_;
  bool stopped_{false};
};

}  // namespace csiscope
