// Reference classifier for the bridge line protocol.
//
//   csiscope-centroid --model model.json          classify F lines from stdin
//   csiscope-centroid --train --out model.json a.csv b.csv ...
//                                                 one csv-simple recording per class

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>

#include "csiscope/bridge.hpp"
#include "csiscope/error.hpp"
#include "csiscope/features.hpp"
#include "csiscope/recording.hpp"

using namespace csiscope;

namespace {

int Classify(const std::string &model_path, bool with_phases) {
  WindowClassifier classifier(LoadModel(model_path));
  std::uint64_t bad_lines = 0;
  std::string line;
  while (std::getline(std::cin, line)) {
    auto frame = ParseFrameLine(line);
    if (!frame) {
      ++bad_lines;
      continue;
    }
    if (with_phases) frame->values.resize(frame->values.size() / 2);
    try {
      if (auto r = classifier.Push(frame->mac, frame->timestamp_us, std::move(frame->values))) {
        const auto out = FormatResultLine(*r);
        std::fwrite(out.data(), 1, out.size(), stdout);
        std::fflush(stdout);
      }
    } catch (const Error &e) {
      std::fprintf(stderr, "csiscope-centroid: %s\n", e.what());
    }
  }
  if (bad_lines) std::fprintf(stderr, "csiscope-centroid: skipped %llu malformed lines\n",
                              static_cast<unsigned long long>(bad_lines));
  return 0;
}

int Train(const std::vector<std::string> &recordings, const std::string &out, std::size_t window,
          std::size_t band_width) {
  std::vector<LabeledWindow> windows;
  std::vector<std::string> names;
  std::size_t n = 0;
  for (std::size_t c = 0; c < recordings.size(); ++c) {
    RecordingReader reader(recordings[c]);
    names.push_back(reader.meta().label.value_or(std::filesystem::path(recordings[c]).stem().string()));
    if (n == 0) n = reader.meta().n_subcarriers;
    const auto spec = FeatureSpec::Uniform(n, band_width, window);
    std::vector<ProcessedFrame> pending;
    while (auto f = reader.Next()) {
      pending.push_back(std::move(*f));
      if (pending.size() == window) {
        windows.push_back({static_cast<int>(c), ComputeWindowFeatures(pending, spec)});
        pending.clear();
      }
    }
  }
  auto model = TrainCentroids(windows, FeatureSpec::Uniform(n, band_width, window), recordings.size());
  model.class_names = names;
  SaveModel(model, out);
  std::fprintf(stderr, "csiscope-centroid: %zu windows, %zu classes -> %s\n", windows.size(), names.size(),
               out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"nearest-centroid activity classifier"};
  std::string model_path;
  bool train = false;
  bool with_phases = false;
  std::string out = "model.json";
  std::size_t window = 9;
  std::size_t band_width = 8;
  std::vector<std::string> recordings;
  app.add_option("--model", model_path, "model JSON to classify with");
  app.add_flag("--phases", with_phases, "input lines carry phases after the amplitudes");
  app.add_flag("--train", train, "fit a model from recordings");
  app.add_option("--out", out, "where --train writes the model");
  app.add_option("--window", window, "frames per window")->check(CLI::PositiveNumber);
  app.add_option("--band-width", band_width, "subcarriers per feature band")->check(CLI::PositiveNumber);
  app.add_option("recordings", recordings, "csv-simple recordings, one per class in class order");
  CLI11_PARSE(app, argc, argv);

  try {
    if (train) {
      if (recordings.empty()) throw CLI::ValidationError("--train needs at least one recording");
      return Train(recordings, out, window, band_width);
    }
    if (model_path.empty()) throw CLI::RequiredError("--model");
    return Classify(model_path, with_phases);
  } catch (const CLI::Error &e) {
    return app.exit(e);
  } catch (const std::exception &e) {
    std::fprintf(stderr, "csiscope-centroid: %s\n", e.what());
    return 1;
  }
}
