#include "csiscope/batch.hpp"

#include <algorithm>

#include "csiscope/error.hpp"
#include "csiscope/pipeline.hpp"
#include "csiscope/source.hpp"

namespace csiscope {

std::size_t RecordFromSource(const std::string &source_uri, const ChainConfig &chain, const std::filesystem::path &out,
                             RecordingMeta meta, std::optional<std::size_t> max_frames, const std::atomic<bool> *stop) {
  auto source = OpenSource(SourceUri::Parse(source_uri));
  Pipeline pipeline(chain);
  meta.chain_version = chain.version;
  RecordingWriter writer(out, meta);
  std::size_t written = 0;
  while (!max_frames || written < *max_frames) {
    if (stop && *stop) break;
    auto next = source->Next(std::chrono::milliseconds(100));
    if (next.status == NextStatus::kEndOfStream) break;
    if (next.status != NextStatus::kFrame) continue;
    if (auto p = pipeline.Process(*next.frame)) {
      writer.Append(*p);
      ++written;
    }
  }
  writer.Close();
  return written;
}

std::vector<std::filesystem::path> ListRecordings(const std::filesystem::path &dir) {
  if (!std::filesystem::is_directory(dir)) throw Error(ErrorCode::kFileNotFound, dir.string());
  std::vector<std::filesystem::path> out;
  for (const auto &entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() == ".json") continue;
    if (std::filesystem::exists(SidecarPath(entry.path()))) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string RecordingClassName(const std::filesystem::path &path) {
  RecordingReader reader(path);
  return reader.meta().label.value_or(path.stem().string());
}

EvalResult EvaluateRecordings(const CentroidModel &model, const std::vector<std::filesystem::path> &recordings) {
  EvalResult result;
  const auto window = model.spec.window_frames;
  for (const auto &path : recordings) {
    const auto name = RecordingClassName(path);
    const auto it = std::find(model.class_names.begin(), model.class_names.end(), name);
    if (it == model.class_names.end()) {
      throw Error(ErrorCode::kMissingClass, path.string() + ": class '" + name + "' is not in the model");
    }
    const int label = static_cast<int>(it - model.class_names.begin());
    RecordingReader reader(path);
    std::vector<ProcessedFrame> pending;
    while (auto f = reader.Next()) {
      pending.push_back(std::move(*f));
      if (pending.size() < window) continue;
      result.labels.push_back(label);
      result.predictions.push_back(ClassifyWindow(model, ComputeWindowFeatures(pending, model.spec)).class_id);
      pending.clear();
    }
  }
  result.report = EvaluateFScore(result.predictions, result.labels);
  return result;
}

}  // namespace csiscope
