#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "csiscope/chain_config.hpp"
#include "csiscope/model.hpp"
#include "csiscope/plugin.hpp"

namespace csiscope {

/// Walks the enabled plugins in execution order and returns the final shape.
/// Throws Error(kChainInvalid) at the first plugin whose preconditions the
/// preceding plugins cannot satisfy.
StageShape ValidateChain(const ChainConfig &config, const StageShape &input,
                         const PluginRegistry &registry = PluginRegistry::Default());

/// Instantiated, validated plugin chain for one ChainConfig version.
class CompiledChain {
 public:
  explicit CompiledChain(const ChainConfig &config,
                         const PluginRegistry &registry = PluginRegistry::Default());

  /// nullopt when a filter dropped the frame. Throws Error(kChainInvalid) if
  /// the chain cannot accept the frame's shape.
  std::optional<ProcessedFrame> Run(const CsiFrame &frame, PipelineState &state);

  [[nodiscard]] std::uint64_t version() const { return version_; }

 private:
  struct Stage {
    std::string id;
    std::unique_ptr<Plugin> plugin;
  };

  void EnsureValidFor(const StageShape &input);

  std::uint64_t version_{0};
  std::vector<Stage> stages_;
  std::optional<StageShape> validated_for_;
};

/// One-shot convenience: compile `config` and run one frame.
std::optional<ProcessedFrame> RunChain(const CsiFrame &frame, const ChainConfig &config,
                                       PipelineState &state);

/// Single-stream pipeline. Configuration changes take effect at the next
/// frame boundary.
class Pipeline {
 public:
  explicit Pipeline(ChainConfig config = DefaultChain());

  void SetConfig(ChainConfig config);
  [[nodiscard]] const ChainConfig &config() const { return config_; }

  std::optional<ProcessedFrame> Process(const CsiFrame &frame);

  [[nodiscard]] PipelineState &state() { return state_; }
  [[nodiscard]] std::size_t frames_in() const { return frames_in_; }
  [[nodiscard]] std::size_t frames_dropped() const { return frames_dropped_; }

 private:
  ChainConfig config_;
  std::unique_ptr<CompiledChain> compiled_;
  PipelineState state_;
  std::size_t frames_in_{0};
  std::size_t frames_dropped_{0};
};

}  // namespace csiscope
