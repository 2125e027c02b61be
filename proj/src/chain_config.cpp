#include "csiscope/chain_config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "csiscope/error.hpp"

namespace csiscope {

const PluginInstance *ChainConfig::Find(std::string_view id) const {
  const auto it = std::find_if(plugins.begin(), plugins.end(),
                               [&](const PluginInstance &p) { return p.id == id; });
  return it == plugins.end() ? nullptr : &*it;
}

std::vector<const PluginInstance *> ChainConfig::ExecutionOrder() const {
  std::vector<const PluginInstance *> order;
  for (const auto &p : plugins) {
    if (p.enabled) order.push_back(&p);
  }
  std::sort(order.begin(), order.end(), [](const PluginInstance *a, const PluginInstance *b) {
    return a->priority != b->priority ? a->priority < b->priority : a->id < b->id;
  });
  return order;
}

ChainConfig DefaultChain() {
  ChainConfig config;
  config.plugins = {
      {"mac-filter", "mac-filter", 0, false, {{"allowlist", std::string()}}},
      {"reorder", "reorder", 10, true, {}},
      {"extract", "extract", 20, true, {}},
      {"narrow", "narrow", 25, false, {{"target_n", 64.0}}},
      {"null", "null", 30, true, {}},
      {"rssi-smooth", "rssi-smooth", 35, false, {{"alpha", 0.1}}},
      {"agc", "agc", 40, true, {}},
      {"unwrap", "unwrap", 50, true, {}},
  };
  return config;
}

ConfigCommand ConfigCommand::Enable(std::string id) {
  ConfigCommand c;
  c.op = Op::kEnable;
  c.id = std::move(id);
  return c;
}

ConfigCommand ConfigCommand::Disable(std::string id) {
  ConfigCommand c;
  c.op = Op::kDisable;
  c.id = std::move(id);
  return c;
}

ConfigCommand ConfigCommand::SetPriority(std::string id, int priority) {
  ConfigCommand c;
  c.op = Op::kSetPriority;
  c.id = std::move(id);
  c.priority = priority;
  return c;
}

ConfigCommand ConfigCommand::SetParam(std::string id, std::string param, ParamValue value) {
  ConfigCommand c;
  c.op = Op::kSetParam;
  c.id = std::move(id);
  c.param = std::move(param);
  c.value = std::move(value);
  return c;
}

ConfigCommand ConfigCommand::Add(PluginInstance plugin) {
  ConfigCommand c;
  c.op = Op::kAdd;
  c.id = plugin.id;
  c.plugin = std::move(plugin);
  return c;
}

ConfigCommand ConfigCommand::Remove(std::string id) {
  ConfigCommand c;
  c.op = Op::kRemove;
  c.id = std::move(id);
  return c;
}

void CheckChainConfig(const ChainConfig &config, const PluginRegistry &registry) {
  std::set<std::string> ids;
  for (const auto &p : config.plugins) {
    if (p.id.empty()) throw Error(ErrorCode::kChainInvalid, "plugin with empty id");
    if (!ids.insert(p.id).second) throw Error(ErrorCode::kDuplicatePlugin, p.id);
    // Constructing the plugin checks kind, parameter types and values.
    (void)registry.Create(p.kind, p.params);
  }
}

ChainConfig UpdateChain(const ChainConfig &config, const ConfigCommand &command,
                        const PluginRegistry &registry) {
  ChainConfig next = config;
  auto find = [&](const std::string &id) -> PluginInstance & {
    const auto it = std::find_if(next.plugins.begin(), next.plugins.end(),
                                 [&](const PluginInstance &p) { return p.id == id; });
    if (it == next.plugins.end()) throw Error(ErrorCode::kUnknownPlugin, id);
    return *it;
  };

  using Op = ConfigCommand::Op;
  switch (command.op) {
    case Op::kEnable: find(command.id).enabled = true; break;
    case Op::kDisable: find(command.id).enabled = false; break;
    case Op::kSetPriority: find(command.id).priority = command.priority; break;
    case Op::kSetParam: {
      auto &plugin = find(command.id);
      registry.CheckParam(plugin.kind, command.param, command.value);
      plugin.params[command.param] = command.value;
      (void)registry.Create(plugin.kind, plugin.params);
      break;
    }
    case Op::kAdd: {
      PluginInstance plugin = command.plugin;
      if (plugin.kind.empty()) plugin.kind = plugin.id;
      if (next.Find(plugin.id)) throw Error(ErrorCode::kDuplicatePlugin, plugin.id);
      (void)registry.Create(plugin.kind, plugin.params);
      next.plugins.push_back(std::move(plugin));
      break;
    }
    case Op::kRemove: {
      const auto &plugin = find(command.id);
      next.plugins.erase(next.plugins.begin() + (&plugin - next.plugins.data()));
      break;
    }
  }
  next.version = config.version + 1;
  return next;
}

nlohmann::json ParamToJson(const ParamValue &value) {
  return std::visit([](const auto &v) { return nlohmann::json(v); }, value);
}

ParamValue ParamFromJson(const nlohmann::json &value) {
  if (value.is_boolean()) return value.get<bool>();
  if (value.is_number()) return value.get<double>();
  if (value.is_string()) return value.get<std::string>();
  throw Error(ErrorCode::kBadParamType, "parameter must be a number, string or boolean");
}

nlohmann::json ChainToJson(const ChainConfig &config) {
  nlohmann::json plugins = nlohmann::json::array();
  for (const auto &p : config.plugins) {
    nlohmann::json params = nlohmann::json::object();
    for (const auto &[name, value] : p.params) params[name] = ParamToJson(value);
    plugins.push_back({{"id", p.id},
                       {"kind", p.kind},
                       {"priority", p.priority},
                       {"enabled", p.enabled},
                       {"params", params}});
  }
  return {{"version", config.version}, {"plugins", plugins}};
}

ChainConfig ChainFromJson(const nlohmann::json &doc) {
  if (!doc.is_object() || !doc.contains("plugins") || !doc["plugins"].is_array()) {
    throw Error(ErrorCode::kChainInvalid, "chain document needs a 'plugins' array");
  }
  ChainConfig config;
  if (doc.contains("version")) {
    if (!doc["version"].is_number_unsigned()) {
      throw Error(ErrorCode::kBadParamType, "version must be a non-negative integer");
    }
    config.version = doc["version"].get<std::uint64_t>();
  }
  for (const auto &item : doc["plugins"]) {
    if (!item.is_object() || !item.contains("id") || !item["id"].is_string()) {
      throw Error(ErrorCode::kChainInvalid, "plugin entry needs a string 'id'");
    }
    PluginInstance p;
    p.id = item["id"].get<std::string>();
    p.kind = item.value("kind", p.id);
    if (item.contains("priority")) {
      if (!item["priority"].is_number_integer()) {
        throw Error(ErrorCode::kBadParamType, p.id + ".priority must be an integer");
      }
      p.priority = item["priority"].get<int>();
    }
    if (item.contains("enabled")) {
      if (!item["enabled"].is_boolean()) {
        throw Error(ErrorCode::kBadParamType, p.id + ".enabled must be a boolean");
      }
      p.enabled = item["enabled"].get<bool>();
    }
    if (item.contains("params")) {
      if (!item["params"].is_object()) {
        throw Error(ErrorCode::kBadParamType, p.id + ".params must be an object");
      }
      for (const auto &[name, value] : item["params"].items()) p.params[name] = ParamFromJson(value);
    }
    config.plugins.push_back(std::move(p));
  }
  CheckChainConfig(config);
  return config;
}

ChainConfig LoadChainFile(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorCode::kChainInvalid, path.string() + ": " + e.what());
  }
  return ChainFromJson(doc);
}

}  // namespace csiscope
