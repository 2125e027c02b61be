#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "csiscope/error.hpp"
#include "csiscope/plugin.hpp"

namespace csiscope {

ParamType TypeOf(const ParamValue &value) {
  switch (value.index()) {
    case 0: return ParamType::kNumber;
    case 1: return ParamType::kString;
    default: return ParamType::kBool;
  }
}

std::string_view ParamTypeName(ParamType type) {
  switch (type) {
    case ParamType::kNumber: return "number";
    case ParamType::kString: return "string";
    case ParamType::kBool: return "bool";
  }
  return "unknown";
}

namespace {

std::vector<std::string> SplitList(const std::string &text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void RequirePolarLinear(const StageShape &in, std::string_view who) {
  if (in.order != SubcarrierOrder::kLinear) {
    throw Error(ErrorCode::kChainInvalid,
                std::string(who) + " needs linear subcarrier order; run reorder first");
  }
}

class MacFilterPlugin final : public Plugin {
 public:
  explicit MacFilterPlugin(const ParamMap &params) {
    for (const auto &item : SplitList(std::get<std::string>(params.at("allowlist")))) {
      const auto mac = MacAddress::Parse(item);
      if (!mac) throw Error(ErrorCode::kBadParamType, "allowlist entry '" + item + "' is not a MAC");
      allowlist_.insert(*mac);
    }
  }
  bool Apply(WorkingFrame &w, PipelineState &) const override {
    return MacAllowed(w.frame.source_mac, allowlist_);
  }

 private:
  std::set<MacAddress> allowlist_;
};

class ReorderPlugin final : public Plugin {
 public:
  StageShape Check(const StageShape &in) const override {
    StageShape out = in;
    out.order = SubcarrierOrder::kLinear;
    return out;
  }
  bool Apply(WorkingFrame &w, PipelineState &) const override {
    ReorderSubcarriers(w.frame);
    if (w.has_polar) ReorderSubcarriers(w.polar);
    return true;
  }
};

class ExtractPlugin final : public Plugin {
 public:
  StageShape Check(const StageShape &in) const override {
    if (in.polar) throw Error(ErrorCode::kChainInvalid, "amplitude/phase already extracted");
    StageShape out = in;
    out.polar = true;
    return out;
  }
  bool Apply(WorkingFrame &w, PipelineState &) const override {
    w.polar = ExtractAmplitudePhase(w.frame);
    w.has_polar = true;
    return true;
  }
};

class NarrowPlugin final : public Plugin {
 public:
  explicit NarrowPlugin(const ParamMap &params) {
    const double target = std::get<double>(params.at("target_n"));
    if (target != 64.0 && target != 128.0) {
      throw Error(ErrorCode::kBadTarget, "target_n must be 64 or 128");
    }
    target_ = static_cast<std::size_t>(target);
  }
  bool needs_polar() const override { return true; }
  StageShape Check(const StageShape &in) const override {
    RequirePolarLinear(in, "narrow");
    if (in.n && target_ >= *in.n) {
      throw Error(ErrorCode::kChainInvalid, "narrow target " + std::to_string(target_) +
                                                " is not below N=" + std::to_string(*in.n));
    }
    StageShape out = in;
    out.n = target_;
    return out;
  }
  bool Apply(WorkingFrame &w, PipelineState &) const override {
    NarrowBandwidth(w.polar, target_);
    NarrowBandwidth(w.frame, target_);
    return true;
  }

 private:
  std::size_t target_{64};
};

class NullPlugin final : public Plugin {
 public:
  explicit NullPlugin(const ParamMap &params) {
    const auto &text = std::get<std::string>(params.at("null_set"));
    if (text.empty() || text == "default") return;
    std::vector<int> indices;
    for (const auto &item : SplitList(text)) {
      try {
        std::size_t used = 0;
        indices.push_back(std::stoi(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception &) {
        throw Error(ErrorCode::kBadParamType, "null_set entry '" + item + "' is not an integer");
      }
    }
    explicit_ = std::move(indices);
  }
  bool needs_polar() const override { return true; }
  StageShape Check(const StageShape &in) const override {
    RequirePolarLinear(in, "null");
    if (explicit_ && in.n) {
      const int half = static_cast<int>(*in.n / 2);
      for (const int idx : *explicit_) {
        if (idx < -half || idx >= half) {
          throw Error(ErrorCode::kChainInvalid, "null index " + std::to_string(idx) +
                                                    " does not exist at N=" + std::to_string(*in.n));
        }
      }
    }
    return in;
  }
  bool Apply(WorkingFrame &w, PipelineState &) const override {
    const auto &set = explicit_ ? *explicit_ : CachedDefault(w.polar.amplitudes.size());
    NullGuardSubcarriers(w.polar, set);
    NullGuardSubcarriers(w.frame, set);
    return true;
  }

 private:
  const std::vector<int> &CachedDefault(std::size_t n) const {
    static const std::vector<int> k64 = DefaultNullSet(64);
    static const std::vector<int> k128 = DefaultNullSet(128);
    static const std::vector<int> k256 = DefaultNullSet(256);
    static const std::vector<int> kNone;
    switch (n) {
      case 64: return k64;
      case 128: return k128;
      case 256: return k256;
      default: return kNone;
    }
  }

  std::optional<std::vector<int>> explicit_;
};

class RssiSmoothPlugin final : public Plugin {
 public:
  explicit RssiSmoothPlugin(const ParamMap &params) : alpha_(std::get<double>(params.at("alpha"))) {
    if (!(alpha_ > 0.0 && alpha_ <= 1.0)) {
      throw Error(ErrorCode::kBadAlpha, "alpha must lie in (0, 1], got " + std::to_string(alpha_));
    }
  }
  bool Apply(WorkingFrame &w, PipelineState &state) const override {
    const double smoothed = SmoothRssi(state.smoothing, w.frame.source_mac,
                                       static_cast<double>(w.frame.rssi_dbm), alpha_);
    w.rssi_smoothed = true;
    w.rssi_smoothed_dbm = smoothed;
    return true;
  }

 private:
  double alpha_;
};

class AgcPlugin final : public Plugin {
 public:
  explicit AgcPlugin(const ParamMap &params) : use_smoothed_(std::get<bool>(params.at("use_smoothed"))) {}
  bool needs_polar() const override { return true; }
  bool Apply(WorkingFrame &w, PipelineState &) const override {
    const double rssi = use_smoothed_ && w.rssi_smoothed ? w.rssi_smoothed_dbm
                                                         : static_cast<double>(w.frame.rssi_dbm);
    CompensateAgc(w.polar, rssi);
    return true;
  }

 private:
  bool use_smoothed_;
};

class UnwrapPlugin final : public Plugin {
 public:
  bool needs_polar() const override { return true; }
  StageShape Check(const StageShape &in) const override {
    RequirePolarLinear(in, "unwrap");
    return in;
  }
  bool Apply(WorkingFrame &w, PipelineState &) const override {
    UnwrapPhase(w.polar);
    return true;
  }
};

template <typename T>
PluginKind Kind(std::string name, std::string description, std::vector<ParamSpec> params) {
  PluginKind kind{std::move(name), std::move(description), std::move(params), {}};
  if constexpr (std::is_constructible_v<T, const ParamMap &>) {
    kind.create = [](const ParamMap &p) { return std::make_unique<T>(p); };
  } else {
    kind.create = [](const ParamMap &) { return std::make_unique<T>(); };
  }
  return kind;
}

}  // namespace

void RegisterBuiltinPlugins(PluginRegistry &registry) {
  registry.Register(Kind<MacFilterPlugin>(
      "mac-filter", "Pass only frames from allow-listed transmitters (empty list passes all)",
      {{"allowlist", ParamType::kString, std::string()}}));
  registry.Register(Kind<ReorderPlugin>("reorder", "FFT order to linear subcarrier order", {}));
  registry.Register(Kind<ExtractPlugin>("extract", "Amplitude and phase extraction", {}));
  registry.Register(Kind<NarrowPlugin>("narrow", "Keep the centred target_n subcarriers",
                                       {{"target_n", ParamType::kNumber, 64.0}}));
  registry.Register(Kind<NullPlugin>(
      "null", "Zero guard/DC subcarriers (comma-separated logical indices, empty = 802.11 default)",
      {{"null_set", ParamType::kString, std::string()}}));
  registry.Register(Kind<RssiSmoothPlugin>("rssi-smooth", "Exponential RSSI smoothing per MAC",
                                           {{"alpha", ParamType::kNumber, 0.1}}));
  registry.Register(Kind<AgcPlugin>("agc", "Match total CSI power to the RSSI",
                                    {{"use_smoothed", ParamType::kBool, true}}));
  registry.Register(Kind<UnwrapPlugin>("unwrap", "Remove 2 pi phase jumps across subcarriers", {}));
}

const PluginRegistry &PluginRegistry::Default() {
  static const PluginRegistry registry = WithBuiltins();
  return registry;
}

PluginRegistry PluginRegistry::WithBuiltins() {
  PluginRegistry registry;
  RegisterBuiltinPlugins(registry);
  return registry;
}

void PluginRegistry::Register(PluginKind kind) {
  auto name = kind.name;
  kinds_.insert_or_assign(std::move(name), std::move(kind));
}

const PluginKind *PluginRegistry::Find(std::string_view name) const {
  const auto it = kinds_.find(name);
  return it == kinds_.end() ? nullptr : &it->second;
}

std::vector<std::string> PluginRegistry::Kinds() const {
  std::vector<std::string> out;
  for (const auto &[name, kind] : kinds_) out.push_back(name);
  return out;
}

void PluginRegistry::CheckParam(std::string_view kind_name, const std::string &name,
                                const ParamValue &value) const {
  const PluginKind *kind = Find(kind_name);
  if (!kind) throw Error(ErrorCode::kUnknownPlugin, std::string(kind_name));
  const auto spec = std::find_if(kind->params.begin(), kind->params.end(),
                                 [&](const ParamSpec &s) { return s.name == name; });
  if (spec == kind->params.end()) {
    throw Error(ErrorCode::kBadParamType,
                std::string(kind_name) + " has no parameter '" + name + "'");
  }
  if (TypeOf(value) != spec->type) {
    throw Error(ErrorCode::kBadParamType, std::string(kind_name) + "." + name + " expects " +
                                              std::string(ParamTypeName(spec->type)) + ", got " +
                                              std::string(ParamTypeName(TypeOf(value))));
  }
}

std::unique_ptr<Plugin> PluginRegistry::Create(std::string_view kind_name,
                                               const ParamMap &params) const {
  const PluginKind *kind = Find(kind_name);
  if (!kind) throw Error(ErrorCode::kUnknownPlugin, std::string(kind_name));
  ParamMap full;
  for (const auto &spec : kind->params) full[spec.name] = spec.default_value;
  for (const auto &[name, value] : params) {
    CheckParam(kind_name, name, value);
    full[name] = value;
  }
  return kind->create(full);
}

}  // namespace csiscope
