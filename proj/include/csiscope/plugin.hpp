#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "csiscope/dsp.hpp"
#include "csiscope/model.hpp"

namespace csiscope {

using ParamValue = std::variant<double, std::string, bool>;
using ParamMap = std::map<std::string, ParamValue>;

enum class ParamType { kNumber, kString, kBool };

ParamType TypeOf(const ParamValue &value);
std::string_view ParamTypeName(ParamType type);

struct ParamSpec {
  std::string name;
  ParamType type{ParamType::kNumber};
  ParamValue default_value{0.0};
};

/// What the chain knows about a frame between two plugins. N is unknown when
/// validating a chain before any frame has been seen.
struct StageShape {
  bool polar{false};
  SubcarrierOrder order{SubcarrierOrder::kFft};
  std::optional<std::size_t> n;

  bool operator==(const StageShape &) const = default;
};

/// A frame in flight through the chain. Structural plugins keep `frame.csi`
/// and the polar view aligned.
struct WorkingFrame {
  CsiFrame frame;
  PolarFrame polar;
  bool has_polar{false};
  bool rssi_smoothed{false};
  double rssi_smoothed_dbm{0.0};
};

struct PipelineState {
  SmoothingState smoothing;
};

class Plugin {
 public:
  virtual ~Plugin() = default;

  /// Polar plugins get an implicit amplitude/phase extraction in front of
  /// them when no explicit one ran.
  [[nodiscard]] virtual bool needs_polar() const { return false; }
  /// Shape after this plugin; throws Error(kChainInvalid) if `in` is not
  /// acceptable.
  [[nodiscard]] virtual StageShape Check(const StageShape &in) const { return in; }
  /// Returns false to drop the frame.
  virtual bool Apply(WorkingFrame &frame, PipelineState &state) const = 0;
};

struct PluginKind {
  std::string name;
  std::string description;
  std::vector<ParamSpec> params;
  /// Receives the full parameter set (defaults filled in, types checked).
  std::function<std::unique_ptr<Plugin>(const ParamMap &)> create;
};

class PluginRegistry {
 public:
  /// Registry pre-populated with the built-in plugins.
  static const PluginRegistry &Default();
  static PluginRegistry WithBuiltins();

  void Register(PluginKind kind);
  [[nodiscard]] const PluginKind *Find(std::string_view name) const;
  [[nodiscard]] std::vector<std::string> Kinds() const;

  /// Throws Error(kUnknownPlugin) or Error(kBadParamType); constructor errors
  /// of the plugin itself (e.g. kBadAlpha) propagate.
  [[nodiscard]] std::unique_ptr<Plugin> Create(std::string_view kind, const ParamMap &params) const;
  /// Type-checks a single parameter against the kind's declaration.
  void CheckParam(std::string_view kind, const std::string &name, const ParamValue &value) const;

 private:
  std::map<std::string, PluginKind, std::less<>> kinds_;
};

/// Registers mac-filter, reorder, extract, narrow, null, rssi-smooth, agc, unwrap.
void RegisterBuiltinPlugins(PluginRegistry &registry);

}  // namespace csiscope
