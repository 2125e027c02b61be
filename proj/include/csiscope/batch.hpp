#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "csiscope/chain_config.hpp"
#include "csiscope/features.hpp"
#include "csiscope/recording.hpp"

namespace csiscope {

/// Pulls frames from `source_uri` through `chain` into a recording until the
/// source ends, `max_frames` have been written, or `stop` is set. Runs on the
/// calling thread, so equal inputs give byte-identical files. Returns the
/// number of frames written.
std::size_t RecordFromSource(const std::string &source_uri, const ChainConfig &chain, const std::filesystem::path &out,
                             RecordingMeta meta, std::optional<std::size_t> max_frames = std::nullopt,
                             const std::atomic<bool> *stop = nullptr);

/// Recordings in `dir` (files that have a sidecar), sorted by name.
std::vector<std::filesystem::path> ListRecordings(const std::filesystem::path &dir);

/// Class name of a recording: its sidecar label, else the file stem.
std::string RecordingClassName(const std::filesystem::path &path);

struct EvalResult {
  std::vector<int> labels;
  std::vector<int> predictions;
  FScoreReport report;
};

/// Cuts each recording into consecutive model-sized windows and classifies
/// them in process. The true class is looked up by RecordingClassName in the
/// model's class names. Throws Error(kMissingClass) for an unknown name.
EvalResult EvaluateRecordings(const CentroidModel &model, const std::vector<std::filesystem::path> &recordings);

}  // namespace csiscope
