#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "csiscope/chain_config.hpp"
#include "csiscope/error.hpp"
#include "csiscope/pipeline.hpp"
#include "csiscope/synth.hpp"
#include "support/oracles.hpp"

using namespace csiscope;

namespace {

CsiFrame SynthFrame(std::uint64_t t_us = 1'000'000) {
  return GenerateSyntheticFrame(ShippedProfile("pattern-a"), t_us);
}

ChainConfig AllDisabled() {
  auto config = DefaultChain();
  for (auto &p : config.plugins) p.enabled = false;
  return config;
}

ErrorCode CodeOf(auto &&fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kInvalidFrame;
}

using Ids = std::vector<std::string>;

}  // namespace

TEST_CASE("default chain runs in priority order") {
  PipelineState state;
  const auto out = RunChain(SynthFrame(), DefaultChain(), state);
  REQUIRE(out);
  CHECK(out->polar.applied_plugins == Ids{"reorder", "extract", "null", "agc", "unwrap"});
  CHECK(out->meta().subcarrier_order == SubcarrierOrder::kLinear);
  CHECK(out->polar.amplitudes.size() == 64);
  CHECK(out->csi.size() == 64);
  // Guard positions are zero in both views.
  CHECK(out->polar.amplitudes[0] == 0.0);
  CHECK(out->csi[32] == ComplexSample{0, 0});
}

TEST_CASE("all plugins disabled still yields raw amplitude and phase") {
  PipelineState state;
  const auto frame = SynthFrame();
  const auto out = RunChain(frame, AllDisabled(), state);
  REQUIRE(out);
  CHECK(out->polar.applied_plugins.empty());
  const auto raw = ExtractAmplitudePhase(frame);
  CHECK(out->polar.amplitudes == raw.amplitudes);
  CHECK(out->polar.phases == raw.phases);
  CHECK(out->csi == frame.csi);
  CHECK(out->polar.rssi_smoothed_dbm == frame.rssi_dbm);
}

TEST_CASE("equal priorities run in lexicographic id order") {
  auto config = DefaultChain();
  config = UpdateChain(config, ConfigCommand::SetPriority("agc", 30));
  PipelineState state;
  const auto out = RunChain(SynthFrame(), config, state);
  REQUIRE(out);
  CHECK(out->polar.applied_plugins == Ids{"reorder", "extract", "agc", "null", "unwrap"});
}

TEST_CASE("mac filter plugin drops foreign frames") {
  auto config = DefaultChain();
  config = UpdateChain(config, ConfigCommand::SetParam("mac-filter", "allowlist",
                                                       std::string("aa:bb:cc:dd:ee:ff")));
  config = UpdateChain(config, ConfigCommand::Enable("mac-filter"));
  Pipeline pipeline(config);
  CHECK_FALSE(pipeline.Process(SynthFrame()));
  auto frame = SynthFrame();
  frame.source_mac = *MacAddress::Parse("aa:bb:cc:dd:ee:ff");
  const auto out = pipeline.Process(frame);
  REQUIRE(out);
  CHECK(out->polar.applied_plugins.front() == "mac-filter");
  CHECK(pipeline.frames_dropped() == 1);
  CHECK(pipeline.frames_in() == 2);
}

TEST_CASE("narrowing before reordering is rejected") {
  auto config = DefaultChain();
  config = UpdateChain(config, ConfigCommand::Enable("narrow"));
  config = UpdateChain(config, ConfigCommand::SetPriority("narrow", 5));
  CHECK(CodeOf([&] { ValidateChain(config, {}); }) == ErrorCode::kChainInvalid);
  PipelineState state;
  auto frame = GenerateSyntheticFrame([] {
    auto p = ShippedProfile("idle");
    p.n_subcarriers = 256;
    return p;
  }(), 0);
  CHECK(CodeOf([&] { RunChain(frame, config, state); }) == ErrorCode::kChainInvalid);
}

TEST_CASE("chain validation tracks N through narrowing") {
  // Oracle: the N each stage sees is the input N until narrow, then target_n.
  // A null set holding logical -64 only exists while N >= 128.
  auto config = DefaultChain();
  config = UpdateChain(config, ConfigCommand::Enable("narrow"));
  config = UpdateChain(config, ConfigCommand::SetParam("null", "null_set", std::string("-64,63")));

  const StageShape in128{false, SubcarrierOrder::kFft, 128};
  CHECK(CodeOf([&] { ValidateChain(config, in128); }) == ErrorCode::kChainInvalid);

  auto before_narrow = UpdateChain(config, ConfigCommand::SetPriority("null", 22));
  const auto out = ValidateChain(before_narrow, in128);
  CHECK(out.n == 64u);
  CHECK(out.order == SubcarrierOrder::kLinear);
  CHECK(out.polar);

  const StageShape in64{false, SubcarrierOrder::kFft, 64};
  CHECK(CodeOf([&] { ValidateChain(before_narrow, in64); }) == ErrorCode::kChainInvalid);
}

TEST_CASE("narrowing a 256-subcarrier frame through the chain") {
  auto config = DefaultChain();
  config = UpdateChain(config, ConfigCommand::Enable("narrow"));
  auto profile = ShippedProfile("idle");
  profile.n_subcarriers = 256;
  const auto frame = GenerateSyntheticFrame(profile, 0);
  PipelineState state;
  const auto out = RunChain(frame, config, state);
  REQUIRE(out);
  CHECK(out->polar.amplitudes.size() == 64);
  CHECK(out->csi.size() == 64);
  CHECK(out->meta().n_subcarriers == 64);
  CHECK(out->meta().bandwidth_mhz == 20);
}

TEST_CASE("AGC uses the smoothed RSSI when smoothing runs first") {
  auto config = DefaultChain();
  config = UpdateChain(config, ConfigCommand::Enable("rssi-smooth"));
  config = UpdateChain(config, ConfigCommand::SetParam("rssi-smooth", "alpha", 0.5));
  Pipeline pipeline(config);
  auto a = SynthFrame(0);
  a.rssi_dbm = -50;
  auto b = SynthFrame(111'111);
  b.rssi_dbm = -40;
  pipeline.Process(a);
  const auto out = pipeline.Process(b);
  REQUIRE(out);
  CHECK(out->polar.rssi_smoothed_dbm == -45.0);
  double power = 0;
  for (const double x : out->polar.amplitudes) power += x * x;
  CHECK(power == doctest::Approx(std::pow(10.0, -4.5)).epsilon(1e-9));

  auto raw = UpdateChain(config, ConfigCommand::SetParam("agc", "use_smoothed", false));
  Pipeline raw_pipeline(raw);
  raw_pipeline.Process(a);
  const auto raw_out = raw_pipeline.Process(b);
  power = 0;
  for (const double x : raw_out->polar.amplitudes) power += x * x;
  CHECK(power == doctest::Approx(1e-4).epsilon(1e-9));
}

TEST_CASE("update_chain commands") {
  const auto base = DefaultChain();
  SUBCASE("disable bumps the version") {
    const auto next = UpdateChain(base, ConfigCommand::Disable("agc"));
    CHECK_FALSE(next.Find("agc")->enabled);
    CHECK(next.version == base.version + 1);
    CHECK(base.Find("agc")->enabled);
  }
  SUBCASE("set-param") {
    const auto next = UpdateChain(base, ConfigCommand::SetParam("rssi-smooth", "alpha", 0.3));
    CHECK(std::get<double>(next.Find("rssi-smooth")->params.at("alpha")) == 0.3);
  }
  SUBCASE("wrong parameter type") {
    CHECK(CodeOf([&] {
            UpdateChain(base, ConfigCommand::SetParam("rssi-smooth", "alpha", std::string("abc")));
          }) == ErrorCode::kBadParamType);
    CHECK(std::get<double>(base.Find("rssi-smooth")->params.at("alpha")) == 0.1);
  }
  SUBCASE("unknown parameter and plugin") {
    CHECK(CodeOf([&] { UpdateChain(base, ConfigCommand::SetParam("agc", "gain", 1.0)); }) ==
          ErrorCode::kBadParamType);
    CHECK(CodeOf([&] { UpdateChain(base, ConfigCommand::Disable("hampel")); }) ==
          ErrorCode::kUnknownPlugin);
  }
  SUBCASE("parameter values are checked by the plugin") {
    CHECK(CodeOf([&] { UpdateChain(base, ConfigCommand::SetParam("rssi-smooth", "alpha", 2.0)); }) ==
          ErrorCode::kBadAlpha);
  }
  SUBCASE("add and remove") {
    auto next = UpdateChain(base, ConfigCommand::Add({"unwrap-2", "unwrap", 60, true, {}}));
    CHECK(next.Find("unwrap-2"));
    CHECK(CodeOf([&] { UpdateChain(next, ConfigCommand::Add({"unwrap-2", "unwrap", 1, true, {}})); }) ==
          ErrorCode::kDuplicatePlugin);
    CHECK(CodeOf([&] { UpdateChain(next, ConfigCommand::Add({"x", "wavelet", 1, true, {}})); }) ==
          ErrorCode::kUnknownPlugin);
    next = UpdateChain(next, ConfigCommand::Remove("unwrap-2"));
    CHECK_FALSE(next.Find("unwrap-2"));
    CHECK(next.version == base.version + 2);
  }
}

TEST_CASE("chain JSON round trip and validation") {
  auto config = UpdateChain(DefaultChain(), ConfigCommand::SetParam("rssi-smooth", "alpha", 0.25));
  const auto doc = ChainToJson(config);
  CHECK(ChainFromJson(doc) == config);

  const auto minimal = nlohmann::json::parse(R"({"plugins":[{"id":"reorder","priority":1},
      {"id":"agc","priority":2,"params":{"use_smoothed":false}}]})");
  const auto parsed = ChainFromJson(minimal);
  CHECK(parsed.plugins.size() == 2);
  CHECK(parsed.plugins[1].kind == "agc");
  CHECK(parsed.plugins[1].enabled);

  CHECK_THROWS_AS(ChainFromJson(nlohmann::json::parse(R"({"plugins":[{"id":"agc","params":{"use_smoothed":[1]}}]})")), Error);
  CHECK_THROWS_AS(ChainFromJson(nlohmann::json::parse(R"({"plugins":[{"id":"agc"},{"id":"agc"}]})")), Error);
  CHECK_THROWS_AS(ChainFromJson(nlohmann::json::parse(R"({"plugins":[{"id":"agc","priority":"high"}]})")), Error);
  CHECK_THROWS_AS(ChainFromJson(nlohmann::json::parse(R"({"chain":[]})")), Error);

  const auto path = std::filesystem::temp_directory_path() / "csiscope_chain_test.json";
  std::ofstream(path) << doc.dump(2);
  CHECK(LoadChainFile(path) == config);
  std::filesystem::remove(path);
}

TEST_CASE("pipeline applies config changes at the next frame") {
  Pipeline pipeline;
  const auto first = pipeline.Process(SynthFrame(0));
  pipeline.SetConfig(UpdateChain(pipeline.config(), ConfigCommand::Disable("agc")));
  const auto second = pipeline.Process(SynthFrame(111'111));
  REQUIRE(first);
  REQUIRE(second);
  CHECK(std::find(first->polar.applied_plugins.begin(), first->polar.applied_plugins.end(), "agc") !=
        first->polar.applied_plugins.end());
  CHECK(std::find(second->polar.applied_plugins.begin(), second->polar.applied_plugins.end(), "agc") ==
        second->polar.applied_plugins.end());
}

TEST_CASE("processing is deterministic") {
  auto config = DefaultChain();
  config = UpdateChain(config, ConfigCommand::Enable("rssi-smooth"));
  std::vector<ProcessedFrame> runs[2];
  for (auto &run : runs) {
    Pipeline pipeline(config);
    for (std::uint64_t k = 0; k < 50; ++k) run.push_back(*pipeline.Process(SynthFrame(k * 111'111)));
  }
  CHECK(runs[0] == runs[1]);
}

TEST_CASE("a new plugin kind needs only a registry entry") {
  class ScalePlugin final : public Plugin {
   public:
    explicit ScalePlugin(double factor) : factor_(factor) {}
    bool needs_polar() const override { return true; }
    bool Apply(WorkingFrame &w, PipelineState &) const override {
      for (double &a : w.polar.amplitudes) a *= factor_;
      return true;
    }

   private:
    double factor_;
  };
  auto registry = PluginRegistry::WithBuiltins();
  registry.Register({"scale", "multiply amplitudes", {{"factor", ParamType::kNumber, 2.0}},
                     [](const ParamMap &p) { return std::make_unique<ScalePlugin>(std::get<double>(p.at("factor"))); }});
  ChainConfig config;
  config.plugins = {{"scale", "scale", 0, true, {{"factor", 3.0}}}};
  CompiledChain chain(config, registry);
  PipelineState state;
  CsiFrame frame;
  frame.csi = std::vector<ComplexSample>(64, {1.0, 0.0});
  frame.bandwidth_mhz = 20;
  const auto out = chain.Run(frame, state);
  REQUIRE(out);
  CHECK(out->polar.amplitudes[5] == 3.0);
}
