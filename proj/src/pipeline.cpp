#include "csiscope/pipeline.hpp"

#include "csiscope/error.hpp"

namespace csiscope {

namespace {

StageShape Advance(const Plugin &plugin, const std::string &id, StageShape shape) {
  if (plugin.needs_polar()) shape.polar = true;
  try {
    return plugin.Check(shape);
  } catch (const Error &e) {
    throw Error(ErrorCode::kChainInvalid, "plugin '" + id + "': " + e.message());
  }
}

}  // namespace

StageShape ValidateChain(const ChainConfig &config, const StageShape &input,
                         const PluginRegistry &registry) {
  CheckChainConfig(config, registry);
  StageShape shape = input;
  for (const auto *instance : config.ExecutionOrder()) {
    const auto plugin = registry.Create(instance->kind, instance->params);
    shape = Advance(*plugin, instance->id, shape);
  }
  shape.polar = true;
  return shape;
}

CompiledChain::CompiledChain(const ChainConfig &config, const PluginRegistry &registry)
    : version_(config.version) {
  CheckChainConfig(config, registry);
  for (const auto *instance : config.ExecutionOrder()) {
    stages_.push_back({instance->id, registry.Create(instance->kind, instance->params)});
  }
}

void CompiledChain::EnsureValidFor(const StageShape &input) {
  if (validated_for_ == input) return;
  StageShape shape = input;
  for (const auto &stage : stages_) shape = Advance(*stage.plugin, stage.id, shape);
  validated_for_ = input;
}

std::optional<ProcessedFrame> CompiledChain::Run(const CsiFrame &frame, PipelineState &state) {
  EnsureValidFor({false, frame.subcarrier_order, frame.csi.size()});

  WorkingFrame w;
  w.frame = frame;
  std::vector<std::string> applied;
  applied.reserve(stages_.size());
  for (const auto &stage : stages_) {
    if (stage.plugin->needs_polar() && !w.has_polar) {
      w.polar = ExtractAmplitudePhase(w.frame);
      w.has_polar = true;
    }
    if (!stage.plugin->Apply(w, state)) return std::nullopt;
    applied.push_back(stage.id);
  }
  if (!w.has_polar) w.polar = ExtractAmplitudePhase(w.frame);

  ProcessedFrame out;
  out.polar = std::move(w.polar);
  out.polar.meta = MetaOf(w.frame);
  out.polar.rssi_smoothed_dbm =
      w.rssi_smoothed ? w.rssi_smoothed_dbm : static_cast<double>(w.frame.rssi_dbm);
  out.polar.applied_plugins = std::move(applied);
  out.csi = std::move(w.frame.csi);
  return out;
}

std::optional<ProcessedFrame> RunChain(const CsiFrame &frame, const ChainConfig &config,
                                       PipelineState &state) {
  CompiledChain chain(config);
  return chain.Run(frame, state);
}

Pipeline::Pipeline(ChainConfig config) { SetConfig(std::move(config)); }

void Pipeline::SetConfig(ChainConfig config) {
  auto compiled = std::make_unique<CompiledChain>(config);
  config_ = std::move(config);
  compiled_ = std::move(compiled);
}

std::optional<ProcessedFrame> Pipeline::Process(const CsiFrame &frame) {
  ++frames_in_;
  auto out = compiled_->Run(frame, state_);
  if (!out) ++frames_dropped_;
  return out;
}

}  // namespace csiscope
