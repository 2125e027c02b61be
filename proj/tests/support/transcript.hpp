#pragma once

// Scripted control session used by the golden-file test and the acceptance
// binary. A script line is either a control message or {"step": n}.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "csiscope/session.hpp"

namespace transcript {

inline constexpr const char *kSource = "synth://pattern-a?mode=offline&count=30&seed=11";

inline std::vector<nlohmann::json> ReadJsonLines(const std::filesystem::path &path) {
  std::ifstream in(path);
  std::vector<nlohmann::json> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(nlohmann::json::parse(line));
  }
  return out;
}

inline void WriteJsonLines(const std::filesystem::path &path, const std::vector<nlohmann::json> &rows) {
  std::ofstream out(path);
  for (const auto &r : rows) out << r.dump() << '\n';
}

inline std::vector<nlohmann::json> Run(const std::vector<nlohmann::json> &script,
                                       const std::filesystem::path &record_dir) {
  std::filesystem::create_directories(record_dir);
  csiscope::SessionOptions opts;
  opts.source_uri = kSource;
  opts.record_dir = record_dir;
  std::vector<nlohmann::json> out;
  csiscope::Session session(opts);
  const auto client = session.Connect();
  auto drain = [&] {
    while (auto text = session.TryPop(client)) out.push_back(nlohmann::json::parse(*text));
  };
  drain();
  for (const auto &line : script) {
    if (line.contains("step")) {
      for (int i = 0; i < line["step"].get<int>(); ++i) session.Step();
    } else {
      session.Execute(client, line);
    }
    drain();
  }
  return out;
}

// Keys ending in _us and child pids vary from run to run.
inline bool Ignored(const std::string &key) {
  return key == "pid" || (key.size() > 3 && key.compare(key.size() - 3, 3, "_us") == 0);
}

inline std::optional<std::string> Diff(const nlohmann::json &want, const nlohmann::json &got,
                                       const std::string &where = "") {
  if (want.is_number() && got.is_number()) {
    const double a = want.get<double>(), b = got.get<double>();
    if (a == b || std::fabs(a - b) <= 1e-9 * std::max(std::fabs(a), std::fabs(b))) return std::nullopt;
    return where + ": " + want.dump() + " != " + got.dump();
  }
  if (want.type() != got.type()) return where + ": type " + want.dump() + " vs " + got.dump();
  if (want.is_object()) {
    for (const auto &[k, v] : want.items()) {
      if (Ignored(k)) continue;
      if (!got.contains(k)) return where + "/" + k + ": missing";
      if (auto d = Diff(v, got[k], where + "/" + k)) return d;
    }
    for (const auto &[k, v] : got.items()) {
      if (!Ignored(k) && !want.contains(k)) return where + "/" + k + ": unexpected";
    }
    return std::nullopt;
  }
  if (want.is_array()) {
    if (want.size() != got.size()) {
      return where + ": length " + std::to_string(want.size()) + " vs " + std::to_string(got.size());
    }
    for (std::size_t i = 0; i < want.size(); ++i) {
      if (auto d = Diff(want[i], got[i], where + "/" + std::to_string(i))) return d;
    }
    return std::nullopt;
  }
  if (want != got) return where + ": " + want.dump() + " != " + got.dump();
  return std::nullopt;
}

inline std::optional<std::string> DiffTranscripts(const std::vector<nlohmann::json> &want,
                                                  const std::vector<nlohmann::json> &got) {
  for (std::size_t i = 0; i < std::min(want.size(), got.size()); ++i) {
    if (auto d = Diff(want[i], got[i])) return "envelope " + std::to_string(i + 1) + *d;
  }
  if (want.size() != got.size()) {
    return "transcript has " + std::to_string(got.size()) + " envelopes, golden has " + std::to_string(want.size());
  }
  return std::nullopt;
}

}  // namespace transcript
