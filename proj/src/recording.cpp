#include "csiscope/recording.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <json.hpp>

#include "csiscope/bytes.hpp"
#include "csiscope/dsp.hpp"
#include "csiscope/error.hpp"
#include "csiscope/wire_codec.hpp"

namespace csiscope {
namespace {

constexpr char kBinaryMagic[4] = {'W', 'E', 'Y', 'R'};
constexpr std::uint8_t kBinaryVersion = 1;

std::string_view OrderName(SubcarrierOrder order) {
  return order == SubcarrierOrder::kFft ? "fft" : "linear";
}

void AppendG6(std::string &out, double v) {
  char buf[32];
  const int len = std::snprintf(buf, sizeof buf, "%#.6g", v);
  out.append(buf, static_cast<std::size_t>(len));
}

void AppendInt(std::string &out, long long v) {
  char buf[24];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

std::vector<std::string_view> SplitCommas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

template <typename T>
bool ParseNumber(std::string_view text, T &out) {
  const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  return res.ec == std::errc() && res.ptr == text.data() + text.size();
}

std::size_t FrameWidth(RecordingFormat format, const ProcessedFrame &frame) {
  return format == RecordingFormat::kCsvSimple ? frame.polar.amplitudes.size() : frame.csi.size();
}

ProcessedFrame FromSamples(FrameMeta meta, std::vector<ComplexSample> csi) {
  CsiFrame frame;
  frame.timestamp_us = meta.timestamp_us;
  frame.source_mac = meta.source_mac;
  frame.seq = meta.seq;
  frame.rssi_dbm = meta.rssi_dbm;
  frame.bandwidth_mhz = BandwidthForSubcarriers(csi.size());
  frame.subcarrier_order = meta.subcarrier_order;
  frame.csi = std::move(csi);
  ProcessedFrame out;
  out.polar = ExtractAmplitudePhase(frame);
  out.csi = std::move(frame.csi);
  return out;
}

}  // namespace

std::string_view FormatName(RecordingFormat format) {
  switch (format) {
    case RecordingFormat::kCsvSimple: return "csv-simple";
    case RecordingFormat::kCsvCompact: return "csv-compact";
    case RecordingFormat::kBinary: return "binary";
  }
  return "binary";
}

RecordingFormat ParseFormat(std::string_view name) {
  for (const auto f : {RecordingFormat::kCsvSimple, RecordingFormat::kCsvCompact, RecordingFormat::kBinary}) {
    if (FormatName(f) == name) return f;
  }
  throw Error(ErrorCode::kUnsupportedFormat, "unknown recording format '" + std::string(name) + "'");
}

std::filesystem::path SidecarPath(const std::filesystem::path &path) {
  auto p = path;
  p += ".json";
  return p;
}

// ---------------------------------------------------------------------------
// Writer

RecordingWriter::RecordingWriter(const std::filesystem::path &path, RecordingMeta meta)
    : meta_(std::move(meta)) {
  meta_.path = path;
  meta_.frames = 0;
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw Error(ErrorCode::kIoError, "cannot open " + path.string() + " for writing");
  if (meta_.n_subcarriers > 0) WriteHeader();
  WriteSidecar();
}

RecordingWriter::~RecordingWriter() {
  try {
    Close();
  } catch (const std::exception &) {
  }
}

void RecordingWriter::WriteHeader() {
  const std::size_t n = meta_.n_subcarriers;
  std::string header;
  switch (meta_.format) {
    case RecordingFormat::kCsvSimple:
      header = "timestamp_us,mac,seq,rssi_dbm";
      for (std::size_t i = 0; i < n; ++i) header += ",amp_" + std::to_string(i);
      for (std::size_t i = 0; i < n; ++i) header += ",phase_" + std::to_string(i);
      header += '\n';
      break;
    case RecordingFormat::kCsvCompact:
      header = "timestamp_us,mac,rssi_dbm";
      for (std::size_t i = 0; i < n; ++i) {
        header += ",re_" + std::to_string(i) + ",im_" + std::to_string(i);
      }
      header += '\n';
      break;
    case RecordingFormat::kBinary: {
      if (n > 0xffff) throw Error(ErrorCode::kNMismatch, "N does not fit the binary header");
      header.assign(kBinaryMagic, 4);
      header += static_cast<char>(kBinaryVersion);
      header += static_cast<char>(n & 0xff);
      header += static_cast<char>(n >> 8);
      header += '\0';
      break;
    }
  }
  out_.write(header.data(), static_cast<std::streamsize>(header.size()));
  if (!out_) throw Error(ErrorCode::kIoError, "header write failed");
  header_written_ = true;
}

void RecordingWriter::Append(const ProcessedFrame &frame) {
  if (closed_) throw Error(ErrorCode::kIoError, "recording is closed");
  const std::size_t n = FrameWidth(meta_.format, frame);
  if (!header_written_) {
    meta_.n_subcarriers = n;
    meta_.subcarrier_order = frame.meta().subcarrier_order;
    WriteHeader();
  }
  if (n != meta_.n_subcarriers) {
    throw Error(ErrorCode::kNMismatch, "frame has N=" + std::to_string(n) + ", recording has N=" +
                                           std::to_string(meta_.n_subcarriers));
  }
  const auto &m = frame.meta();
  std::string rec;
  switch (meta_.format) {
    case RecordingFormat::kCsvSimple:
      rec.reserve(32 + 26 * n);
      AppendInt(rec, static_cast<long long>(m.timestamp_us));
      rec += ',';
      rec += m.source_mac.ToString();
      rec += ',';
      AppendInt(rec, m.seq);
      rec += ',';
      AppendInt(rec, m.rssi_dbm);
      for (const double a : frame.polar.amplitudes) {
        rec += ',';
        AppendG6(rec, a);
      }
      for (const double p : frame.polar.phases) {
        rec += ',';
        AppendG6(rec, p);
      }
      rec += '\n';
      break;
    case RecordingFormat::kCsvCompact:
      rec.reserve(32 + 12 * n);
      AppendInt(rec, static_cast<long long>(m.timestamp_us));
      rec += ',';
      rec += m.source_mac.ToHex12();
      rec += ',';
      AppendInt(rec, m.rssi_dbm);
      for (const auto &s : frame.csi) {
        rec += ',';
        AppendInt(rec, QuantizeSample(s.re));
        rec += ',';
        AppendInt(rec, QuantizeSample(s.im));
      }
      rec += '\n';
      break;
    case RecordingFormat::kBinary: {
      std::vector<std::uint8_t> b;
      b.reserve(BinaryRecordSize(n));
      bytes::PutU64Le(b, m.timestamp_us);
      b.insert(b.end(), m.source_mac.bytes.begin(), m.source_mac.bytes.end());
      bytes::PutU16Le(b, m.seq);
      b.push_back(static_cast<std::uint8_t>(static_cast<std::int8_t>(std::clamp(m.rssi_dbm, -128, 127))));
      for (const auto &s : frame.csi) {
        bytes::PutI16Le(b, QuantizeSample(s.re));
        bytes::PutI16Le(b, QuantizeSample(s.im));
      }
      rec.assign(b.begin(), b.end());
      break;
    }
  }
  out_.write(rec.data(), static_cast<std::streamsize>(rec.size()));
  if (!out_) throw Error(ErrorCode::kIoError, "record write failed");
  ++meta_.frames;
}

void RecordingWriter::Close() {
  if (closed_) return;
  closed_ = true;
  out_.flush();
  const bool ok = static_cast<bool>(out_);
  out_.close();
  WriteSidecar();
  if (!ok) throw Error(ErrorCode::kIoError, "flush failed for " + meta_.path.string());
}

void RecordingWriter::WriteSidecar() const {
  nlohmann::json doc = {
      {"format", FormatName(meta_.format)},
      {"started_us", meta_.started_us},
      {"chain_version", meta_.chain_version},
      {"label", meta_.label ? nlohmann::json(*meta_.label) : nlohmann::json(nullptr)},
      {"n_subcarriers", meta_.n_subcarriers},
      {"subcarrier_order", OrderName(meta_.subcarrier_order)},
      {"frames", meta_.frames},
  };
  std::ofstream side(SidecarPath(meta_.path), std::ios::trunc);
  side << doc.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Reader

RecordingReader::RecordingReader(const std::filesystem::path &path) {
  meta_.path = path;
  in_.open(path, std::ios::binary);
  if (!in_) throw Error(ErrorCode::kFileNotFound, path.string());

  char head[kBinaryHeaderSize] = {};
  in_.read(head, sizeof head);
  const auto got = static_cast<std::size_t>(in_.gcount());
  if (got >= 4 && std::memcmp(head, kBinaryMagic, 4) == 0) {
    if (got < kBinaryHeaderSize) throw Error(ErrorCode::kBadHeader, "short binary header");
    if (static_cast<std::uint8_t>(head[4]) != kBinaryVersion) {
      throw Error(ErrorCode::kBadHeader, "unsupported binary version " +
                                             std::to_string(static_cast<std::uint8_t>(head[4])));
    }
    meta_.format = RecordingFormat::kBinary;
    meta_.n_subcarriers = static_cast<std::uint8_t>(head[5]) | (static_cast<std::uint8_t>(head[6]) << 8);
    if (meta_.n_subcarriers == 0) throw Error(ErrorCode::kBadHeader, "N is zero");
  } else {
    in_.clear();
    in_.seekg(0);
    std::string line;
    if (!std::getline(in_, line) || in_.eof()) throw Error(ErrorCode::kBadHeader, "missing header row");
    const auto fields = SplitCommas(line);
    auto expect = [&](std::size_t start, std::size_t count, auto name_of) {
      for (std::size_t i = 0; i < count; ++i) {
        if (fields[start + i] != name_of(i)) {
          throw Error(ErrorCode::kBadHeader, "unexpected column '" + std::string(fields[start + i]) + "'");
        }
      }
    };
    if (fields.size() > 4 && fields[0] == "timestamp_us" && fields[1] == "mac" && fields[2] == "seq" &&
        fields[3] == "rssi_dbm" && (fields.size() - 4) % 2 == 0) {
      meta_.format = RecordingFormat::kCsvSimple;
      const std::size_t n = (fields.size() - 4) / 2;
      expect(4, n, [](std::size_t i) { return "amp_" + std::to_string(i); });
      expect(4 + n, n, [](std::size_t i) { return "phase_" + std::to_string(i); });
      meta_.n_subcarriers = n;
    } else if (fields.size() > 3 && fields[0] == "timestamp_us" && fields[1] == "mac" &&
               fields[2] == "rssi_dbm" && (fields.size() - 3) % 2 == 0) {
      meta_.format = RecordingFormat::kCsvCompact;
      const std::size_t n = (fields.size() - 3) / 2;
      expect(3, 2 * n, [](std::size_t i) { return (i % 2 ? "im_" : "re_") + std::to_string(i / 2); });
      meta_.n_subcarriers = n;
    } else {
      throw Error(ErrorCode::kBadHeader, "not a recording: " + path.string());
    }
  }

  std::ifstream side(SidecarPath(path));
  if (side) {
    try {
      const auto doc = nlohmann::json::parse(side);
      meta_.started_us = doc.value("started_us", std::uint64_t{0});
      meta_.chain_version = doc.value("chain_version", std::uint64_t{0});
      if (doc.contains("label") && doc["label"].is_string()) meta_.label = doc["label"].get<std::string>();
      if (doc.value("subcarrier_order", std::string("linear")) == "fft") {
        meta_.subcarrier_order = SubcarrierOrder::kFft;
      }
      meta_.frames = doc.value("frames", std::uint64_t{0});
    } catch (const nlohmann::json::exception &e) {
      throw Error(ErrorCode::kBadHeader, std::string("sidecar: ") + e.what());
    }
  }
}

std::optional<ProcessedFrame> RecordingReader::Next() {
  auto frame = meta_.format == RecordingFormat::kBinary ? NextBinary() : NextCsv();
  if (frame) ++record_index_;
  return frame;
}

std::optional<ProcessedFrame> RecordingReader::NextBinary() {
  const std::size_t n = meta_.n_subcarriers;
  std::vector<std::uint8_t> rec(BinaryRecordSize(n));
  in_.read(reinterpret_cast<char *>(rec.data()), static_cast<std::streamsize>(rec.size()));
  const auto got = static_cast<std::size_t>(in_.gcount());
  if (got == 0) return std::nullopt;
  if (got < rec.size()) {
    throw Error(ErrorCode::kTruncatedRecord, "record " + std::to_string(record_index_) + " has " +
                                                 std::to_string(got) + " of " + std::to_string(rec.size()) +
                                                 " bytes");
  }
  const std::span<const std::uint8_t> b(rec);
  FrameMeta m;
  m.timestamp_us = bytes::ReadU64Le(b, 0);
  std::copy_n(rec.begin() + 8, 6, m.source_mac.bytes.begin());
  m.seq = bytes::ReadU16Le(b, 14);
  m.rssi_dbm = static_cast<std::int8_t>(rec[16]);
  m.subcarrier_order = meta_.subcarrier_order;
  std::vector<ComplexSample> csi(n);
  for (std::size_t i = 0; i < n; ++i) {
    csi[i] = {static_cast<double>(bytes::ReadI16Le(b, 17 + 4 * i)),
              static_cast<double>(bytes::ReadI16Le(b, 19 + 4 * i))};
  }
  return FromSamples(m, std::move(csi));
}

std::optional<ProcessedFrame> RecordingReader::NextCsv() {
  std::string line;
  if (!std::getline(in_, line)) return std::nullopt;
  const auto truncated = [&](const std::string &why) {
    return Error(ErrorCode::kTruncatedRecord, "record " + std::to_string(record_index_) + ": " + why);
  };
  // getline hitting EOF means the final newline never made it to disk.
  if (in_.eof()) {
    if (line.empty()) return std::nullopt;
    throw truncated("missing line terminator");
  }
  const auto fields = SplitCommas(line);
  const std::size_t n = meta_.n_subcarriers;
  FrameMeta m;
  m.subcarrier_order = meta_.subcarrier_order;
  m.n_subcarriers = n;
  m.bandwidth_mhz = BandwidthForSubcarriers(n);
  if (meta_.format == RecordingFormat::kCsvSimple) {
    if (fields.size() != 4 + 2 * n) throw truncated("expected " + std::to_string(4 + 2 * n) + " fields");
    auto mac = MacAddress::Parse(fields[1]);
    if (!ParseNumber(fields[0], m.timestamp_us) || !mac || !ParseNumber(fields[2], m.seq) ||
        !ParseNumber(fields[3], m.rssi_dbm)) {
      throw truncated("bad header fields");
    }
    m.source_mac = *mac;
    ProcessedFrame out;
    out.polar.meta = m;
    out.polar.rssi_smoothed_dbm = m.rssi_dbm;
    out.polar.amplitudes.resize(n);
    out.polar.phases.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (!ParseNumber(fields[4 + i], out.polar.amplitudes[i]) ||
          !ParseNumber(fields[4 + n + i], out.polar.phases[i])) {
        throw truncated("bad value");
      }
    }
    return out;
  }
  if (fields.size() != 3 + 2 * n) throw truncated("expected " + std::to_string(3 + 2 * n) + " fields");
  auto mac = MacAddress::Parse(fields[1]);
  if (!ParseNumber(fields[0], m.timestamp_us) || !mac || !ParseNumber(fields[2], m.rssi_dbm)) {
    throw truncated("bad header fields");
  }
  m.source_mac = *mac;
  std::vector<ComplexSample> csi(n);
  for (std::size_t i = 0; i < n; ++i) {
    int re = 0, im = 0;
    if (!ParseNumber(fields[3 + 2 * i], re) || !ParseNumber(fields[4 + 2 * i], im)) throw truncated("bad sample");
    csi[i] = {static_cast<double>(re), static_cast<double>(im)};
  }
  return FromSamples(m, std::move(csi));
}

std::vector<ProcessedFrame> ReadAllFrames(const std::filesystem::path &path) {
  RecordingReader reader(path);
  std::vector<ProcessedFrame> frames;
  while (auto f = reader.Next()) frames.push_back(std::move(*f));
  return frames;
}

// ---------------------------------------------------------------------------
// Async recorder

AsyncRecorder::AsyncRecorder(const std::filesystem::path &path, RecordingMeta meta)
    : path_(path), writer_(path, std::move(meta)), thread_([this] { Run(); }) {}

AsyncRecorder::~AsyncRecorder() {
  try {
    Stop();
  } catch (const std::exception &) {
  }
}

bool AsyncRecorder::Push(ProcessedFrame frame) {
  {
    std::lock_guard lock(error_mu_);
    if (error_) return false;
  }
  return queue_.Push(std::move(frame));
}

void AsyncRecorder::Run() {
  while (auto frame = queue_.Pop()) {
    try {
      writer_.Append(*frame);
      ++written_;
    } catch (const Error &e) {
      std::lock_guard lock(error_mu_);
      if (!error_) error_ = e.what();
    }
  }
}

std::uint64_t AsyncRecorder::Stop() {
  if (stopped_) return written_.load();
  stopped_ = true;
  queue_.Close();
  if (thread_.joinable()) thread_.join();
  try {
    writer_.Close();
  } catch (const Error &e) {
    std::lock_guard lock(error_mu_);
    if (!error_) error_ = e.what();
  }
  return written_.load();
}

std::optional<std::string> AsyncRecorder::error() const {
  std::lock_guard lock(error_mu_);
  return error_;
}

}  // namespace csiscope
