#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "csiscope/plugin.hpp"

namespace csiscope {

struct PluginInstance {
  std::string id;
  /// Registry kind; defaults to the id in JSON documents.
  std::string kind;
  int priority{0};
  bool enabled{true};
  ParamMap params;

  bool operator==(const PluginInstance &) const = default;
};

struct ChainConfig {
  std::vector<PluginInstance> plugins;
  std::uint64_t version{1};

  [[nodiscard]] const PluginInstance *Find(std::string_view id) const;
  /// Enabled plugins, ascending priority, ties broken by id.
  [[nodiscard]] std::vector<const PluginInstance *> ExecutionOrder() const;

  bool operator==(const ChainConfig &) const = default;
};

/// mac-filter(0, off) reorder(10) extract(20) narrow(25, off) null(30)
/// rssi-smooth(35, off) agc(40) unwrap(50)
ChainConfig DefaultChain();

struct ConfigCommand {
  enum class Op { kEnable, kDisable, kSetPriority, kSetParam, kAdd, kRemove };

  Op op{Op::kEnable};
  std::string id;
  int priority{0};
  std::string param;
  ParamValue value{0.0};
  PluginInstance plugin;

  static ConfigCommand Enable(std::string id);
  static ConfigCommand Disable(std::string id);
  static ConfigCommand SetPriority(std::string id, int priority);
  static ConfigCommand SetParam(std::string id, std::string param, ParamValue value);
  static ConfigCommand Add(PluginInstance plugin);
  static ConfigCommand Remove(std::string id);
};

/// Ids unique, kinds known, parameters well-typed and accepted by the plugin.
/// Throws Error(kDuplicatePlugin | kUnknownPlugin | kBadParamType | ...).
void CheckChainConfig(const ChainConfig &config,
                      const PluginRegistry &registry = PluginRegistry::Default());

/// Returns the mutated config with version + 1; `config` is never modified.
/// Throws Error(kUnknownPlugin | kBadParamType | kDuplicatePlugin) and any
/// plugin construction error.
ChainConfig UpdateChain(const ChainConfig &config, const ConfigCommand &command,
                        const PluginRegistry &registry = PluginRegistry::Default());

nlohmann::json ParamToJson(const ParamValue &value);
/// Throws Error(kBadParamType) for arrays, objects and null.
ParamValue ParamFromJson(const nlohmann::json &value);

nlohmann::json ChainToJson(const ChainConfig &config);
/// Throws Error(kBadParamType | kChainInvalid) on malformed documents.
ChainConfig ChainFromJson(const nlohmann::json &doc);
ChainConfig LoadChainFile(const std::filesystem::path &path);

}  // namespace csiscope
