#include "csiscope/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "csiscope/error.hpp"

namespace csiscope {

FeatureSpec FeatureSpec::Uniform(std::size_t n, std::size_t width, std::size_t window_frames) {
  FeatureSpec spec;
  spec.window_frames = window_frames;
  for (std::size_t b = 0; b + width <= n; b += width) spec.bands.push_back({b, b + width});
  return spec;
}

std::vector<double> ComputeWindowFeatures(std::span<const std::vector<double>> amplitudes, const FeatureSpec &spec) {
  if (amplitudes.empty()) throw Error(ErrorCode::kEmptyWindow, "window has no frames");
  const std::size_t n = amplitudes.front().size();
  for (const auto &row : amplitudes) {
    if (row.size() != n) throw Error(ErrorCode::kDimensionMismatch, "frames in a window differ in N");
  }
  std::vector<double> out;
  out.reserve(spec.dimension());
  const double frames = static_cast<double>(amplitudes.size());
  for (const auto &band : spec.bands) {
    if (band.begin >= band.end || band.end > n) {
      throw Error(ErrorCode::kIndexOutOfRange, "band [" + std::to_string(band.begin) + "," +
                                                   std::to_string(band.end) + ") outside N=" + std::to_string(n));
    }
    const double width = static_cast<double>(band.end - band.begin);
    std::vector<double> band_means;
    band_means.reserve(amplitudes.size());
    double sum = 0.0;
    for (const auto &row : amplitudes) {
      double m = 0.0;
      for (std::size_t i = band.begin; i < band.end; ++i) m += row[i];
      band_means.push_back(m / width);
      sum += band_means.back();
    }
    const double mean = sum / frames;
    double var = 0.0;
    for (const double m : band_means) var += (m - mean) * (m - mean);
    out.push_back(mean);
    out.push_back(std::sqrt(var / frames));
  }
  return out;
}

std::vector<double> ComputeWindowFeatures(std::span<const ProcessedFrame> frames, const FeatureSpec &spec) {
  std::vector<std::vector<double>> rows;
  rows.reserve(frames.size());
  for (const auto &f : frames) rows.push_back(f.polar.amplitudes);
  return ComputeWindowFeatures(rows, spec);
}

double CentroidModel::Distance(std::span<const double> features, std::size_t class_id) const {
  const auto &c = centroids[class_id];
  double sq = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double d = (features[i] - c[i]) / (feature_scale.empty() ? 1.0 : feature_scale[i]);
    sq += d * d;
  }
  return std::sqrt(sq);
}

CentroidModel TrainCentroids(std::span<const LabeledWindow> windows, const FeatureSpec &spec, std::size_t n_classes) {
  const std::size_t dim = spec.dimension();
  CentroidModel model;
  model.spec = spec;
  model.feature_scale.assign(dim, 0.0);

  std::vector<std::size_t> counts(n_classes, 0);
  for (const auto &w : windows) {
    if (w.features.size() != dim) {
      throw Error(ErrorCode::kDimensionMismatch, "window has " + std::to_string(w.features.size()) +
                                                     " features, spec has " + std::to_string(dim));
    }
    if (w.class_id < 0 || static_cast<std::size_t>(w.class_id) >= n_classes) {
      throw Error(ErrorCode::kMissingClass, "label " + std::to_string(w.class_id) + " outside class range");
    }
    ++counts[static_cast<std::size_t>(w.class_id)];
  }
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (counts[c] == 0) throw Error(ErrorCode::kMissingClass, "class " + std::to_string(c) + " has no windows");
  }

  model.centroids.assign(n_classes, std::vector<double>(dim, 0.0));
  for (const auto &w : windows) {
    auto &c = model.centroids[static_cast<std::size_t>(w.class_id)];
    const double count = static_cast<double>(counts[static_cast<std::size_t>(w.class_id)]);
    for (std::size_t i = 0; i < dim; ++i) c[i] += w.features[i] / count;
  }

  // Pooled within-class spread: each window is measured against its own
  // class centroid, so features that separate classes are not shrunk.
  const double total = static_cast<double>(windows.size());
  for (const auto &w : windows) {
    const auto &c = model.centroids[static_cast<std::size_t>(w.class_id)];
    for (std::size_t i = 0; i < dim; ++i) {
      const double d = w.features[i] - c[i];
      model.feature_scale[i] += d * d / total;
    }
  }
  for (std::size_t i = 0; i < dim; ++i) {
    double magnitude = 0.0;
    for (const auto &c : model.centroids) magnitude = std::max(magnitude, std::abs(c[i]));
    const double s = std::sqrt(model.feature_scale[i]);
    // Constant features (guard bands) would divide by zero.
    model.feature_scale[i] = s > 1e-12 * (1.0 + magnitude) ? s : 1.0;
  }
  model.class_names.resize(n_classes);
  for (std::size_t c = 0; c < n_classes; ++c) model.class_names[c] = "class-" + std::to_string(c);
  return model;
}

ClassificationResult ClassifyWindow(const CentroidModel &model, std::span<const double> features) {
  if (model.centroids.empty()) throw Error(ErrorCode::kBadModel, "model has no classes");
  const std::size_t dim = model.centroids.front().size();
  if (features.size() != dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                "got " + std::to_string(features.size()) + " features, model expects " + std::to_string(dim));
  }
  std::vector<double> dist(model.n_classes());
  std::size_t best = 0;
  for (std::size_t c = 0; c < dist.size(); ++c) {
    dist[c] = model.Distance(features, c);
    if (dist[c] < dist[best]) best = c;
  }
  // Shifted by the best distance so exp never underflows for the winner.
  double denom = 0.0;
  for (const double d : dist) denom += std::exp(-(d - dist[best]));
  return {static_cast<int>(best), 1.0 / denom, 0};
}

nlohmann::json ModelToJson(const CentroidModel &model) {
  nlohmann::json bands = nlohmann::json::array();
  for (const auto &b : model.spec.bands) bands.push_back({b.begin, b.end});
  return {
      {"window_frames", model.spec.window_frames},
      {"bands", bands},
      {"class_names", model.class_names},
      {"centroids", model.centroids},
      {"feature_scale", model.feature_scale},
  };
}

CentroidModel ModelFromJson(const nlohmann::json &doc) {
  CentroidModel model;
  try {
    model.spec.window_frames = doc.at("window_frames").get<std::size_t>();
    for (const auto &b : doc.at("bands")) model.spec.bands.push_back({b.at(0).get<std::size_t>(), b.at(1).get<std::size_t>()});
    model.centroids = doc.at("centroids").get<std::vector<std::vector<double>>>();
    if (doc.contains("class_names")) model.class_names = doc["class_names"].get<std::vector<std::string>>();
    if (doc.contains("feature_scale")) model.feature_scale = doc["feature_scale"].get<std::vector<double>>();
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorCode::kBadModel, e.what());
  }
  const std::size_t dim = model.spec.dimension();
  if (model.spec.window_frames == 0) throw Error(ErrorCode::kBadModel, "window_frames must be positive");
  if (model.centroids.empty()) throw Error(ErrorCode::kBadModel, "no centroids");
  for (const auto &c : model.centroids) {
    if (c.size() != dim) throw Error(ErrorCode::kBadModel, "centroid dimension does not match the bands");
  }
  if (!model.feature_scale.empty() && model.feature_scale.size() != dim) {
    throw Error(ErrorCode::kBadModel, "feature_scale dimension does not match the bands");
  }
  for (const double s : model.feature_scale) {
    if (!(s > 0.0)) throw Error(ErrorCode::kBadModel, "feature_scale must be positive");
  }
  if (model.class_names.empty()) {
    for (std::size_t c = 0; c < model.centroids.size(); ++c) model.class_names.push_back("class-" + std::to_string(c));
  }
  if (model.class_names.size() != model.centroids.size()) {
    throw Error(ErrorCode::kBadModel, "class_names and centroids differ in length");
  }
  return model;
}

CentroidModel LoadModel(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFileNotFound, path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorCode::kBadModel, e.what());
  }
  return ModelFromJson(doc);
}

void SaveModel(const CentroidModel &model, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << ModelToJson(model).dump(2) << '\n';
}

std::optional<WindowAccumulator::Window> WindowAccumulator::Push(const MacAddress &mac, std::uint64_t timestamp_us,
                                                                 std::vector<double> amplitudes) {
  auto &w = open_[mac];
  w.mac = mac;
  w.end_us = timestamp_us;
  w.amplitudes.push_back(std::move(amplitudes));
  if (w.amplitudes.size() < window_frames_) return std::nullopt;
  Window done = std::move(w);
  open_.erase(mac);
  return done;
}

std::optional<ClassificationResult> WindowClassifier::Push(const MacAddress &mac, std::uint64_t timestamp_us,
                                                           std::vector<double> amplitudes) {
  auto window = windows_.Push(mac, timestamp_us, std::move(amplitudes));
  if (!window) return std::nullopt;
  auto result = ClassifyWindow(model_, ComputeWindowFeatures(window->amplitudes, model_.spec));
  result.window_end_us = window->end_us;
  return result;
}

FScoreReport EvaluateFScore(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) {
    throw Error(ErrorCode::kLengthMismatch, std::to_string(predictions.size()) + " predictions for " +
                                                std::to_string(labels.size()) + " labels");
  }
  int max_class = -1;
  for (const int v : predictions) max_class = std::max(max_class, v);
  for (const int v : labels) max_class = std::max(max_class, v);
  const auto k = static_cast<std::size_t>(max_class + 1);
  FScoreReport report;
  report.confusion.assign(k, std::vector<std::size_t>(k, 0));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || predictions[i] < 0) throw Error(ErrorCode::kBadFieldRange, "negative class id");
    ++report.confusion[static_cast<std::size_t>(labels[i])][static_cast<std::size_t>(predictions[i])];
  }
  report.classes.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t tp = report.confusion[c][c], predicted = 0, actual = 0;
    for (std::size_t j = 0; j < k; ++j) {
      predicted += report.confusion[j][c];
      actual += report.confusion[c][j];
    }
    auto &s = report.classes[c];
    s.support = actual;
    s.precision = predicted ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
    s.recall = actual ? static_cast<double>(tp) / static_cast<double>(actual) : 0.0;
    s.f1 = s.precision + s.recall > 0.0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    report.macro_f1 += s.f1 / static_cast<double>(k);
  }
  return report;
}

}  // namespace csiscope
