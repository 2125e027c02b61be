#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "csiscope/model.hpp"

namespace csiscope {

/// Half-open range of linear subcarrier positions.
struct Band {
  std::size_t begin{0};
  std::size_t end{0};

  bool operator==(const Band &) const = default;
};

struct FeatureSpec {
  std::vector<Band> bands;
  std::size_t window_frames{9};

  /// Contiguous bands of `width` positions covering [0, n).
  static FeatureSpec Uniform(std::size_t n = 64, std::size_t width = 8, std::size_t window_frames = 9);
  [[nodiscard]] std::size_t dimension() const { return 2 * bands.size(); }

  bool operator==(const FeatureSpec &) const = default;
};

/// Per band: mean amplitude over band x window, then the population standard
/// deviation over time of the per-frame band mean. Throws Error(kEmptyWindow |
/// kDimensionMismatch | kIndexOutOfRange).
std::vector<double> ComputeWindowFeatures(std::span<const std::vector<double>> amplitudes, const FeatureSpec &spec);
std::vector<double> ComputeWindowFeatures(std::span<const ProcessedFrame> frames, const FeatureSpec &spec);

struct CentroidModel {
  FeatureSpec spec;
  std::vector<std::string> class_names;
  /// Per-class mean feature vectors.
  std::vector<std::vector<double>> centroids;
  /// Per-feature divisor applied to differences before distances are taken;
  /// empty means unit scale.
  std::vector<double> feature_scale;

  [[nodiscard]] std::size_t n_classes() const { return centroids.size(); }
  [[nodiscard]] double Distance(std::span<const double> features, std::size_t class_id) const;

  bool operator==(const CentroidModel &) const = default;
};

struct LabeledWindow {
  int class_id{0};
  std::vector<double> features;
};

/// Averages each class; the feature scale is the pooled within-class
/// standard deviation of each feature (deviations from the window's own
/// class centroid, over all windows).
/// Throws Error(kMissingClass | kDimensionMismatch).
CentroidModel TrainCentroids(std::span<const LabeledWindow> windows, const FeatureSpec &spec, std::size_t n_classes);

/// Nearest centroid with softmin confidence; equal distances resolve to the
/// lowest class id. window_end_us is left at 0. Throws Error(kDimensionMismatch).
ClassificationResult ClassifyWindow(const CentroidModel &model, std::span<const double> features);

nlohmann::json ModelToJson(const CentroidModel &model);
/// Throws Error(kBadModel).
CentroidModel ModelFromJson(const nlohmann::json &doc);
/// Throws Error(kFileNotFound | kBadModel).
CentroidModel LoadModel(const std::filesystem::path &path);
void SaveModel(const CentroidModel &model, const std::filesystem::path &path);

/// Cuts a frame stream into non-overlapping windows, one stream per source MAC.
class WindowAccumulator {
 public:
  explicit WindowAccumulator(std::size_t window_frames) : window_frames_(window_frames) {}

  struct Window {
    MacAddress mac;
    std::uint64_t end_us{0};
    std::vector<std::vector<double>> amplitudes;
  };

  /// Returns the completed window when this frame fills one.
  std::optional<Window> Push(const MacAddress &mac, std::uint64_t timestamp_us, std::vector<double> amplitudes);

 private:
  std::size_t window_frames_;
  std::map<MacAddress, Window> open_;
};

/// Windowing plus classification, as run inside the reference classifier.
class WindowClassifier {
 public:
  explicit WindowClassifier(CentroidModel model)
      : model_(std::move(model)), windows_(model_.spec.window_frames) {}

  std::optional<ClassificationResult> Push(const MacAddress &mac, std::uint64_t timestamp_us,
                                           std::vector<double> amplitudes);
  std::optional<ClassificationResult> Push(const ProcessedFrame &frame) {
    return Push(frame.meta().source_mac, frame.meta().timestamp_us, frame.polar.amplitudes);
  }

  [[nodiscard]] const CentroidModel &model() const { return model_; }

 private:
  CentroidModel model_;
  WindowAccumulator windows_;
};

struct ClassScore {
  double precision{0.0};
  double recall{0.0};
  double f1{0.0};
  std::size_t support{0};
};

struct FScoreReport {
  std::vector<ClassScore> classes;
  double macro_f1{0.0};
  /// confusion[label][prediction]
  std::vector<std::vector<std::size_t>> confusion;
};

/// Classes are 0..max(label, prediction). Undefined ratios count as 0.
/// Throws Error(kLengthMismatch).
FScoreReport EvaluateFScore(std::span<const int> predictions, std::span<const int> labels);

}  // namespace csiscope
