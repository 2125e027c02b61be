#include "csiscope/session.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>
#include <thread>

#include "csiscope/error.hpp"

namespace csiscope {
namespace {

const nlohmann::json &Field(const nlohmann::json &msg, const char *name) {
  if (!msg.contains(name)) throw Error(ErrorCode::kBadCommand, std::string("missing field '") + name + "'");
  return msg.at(name);
}

std::string StringField(const nlohmann::json &msg, const char *name) {
  const auto &v = Field(msg, name);
  if (!v.is_string()) throw Error(ErrorCode::kBadCommand, std::string("'") + name + "' must be a string");
  return v.get<std::string>();
}

double NumberField(const nlohmann::json &msg, const char *name) {
  const auto &v = Field(msg, name);
  if (!v.is_number()) throw Error(ErrorCode::kBadCommand, std::string("'") + name + "' must be a number");
  return v.get<double>();
}

int IntField(const nlohmann::json &msg, const char *name) {
  const auto &v = Field(msg, name);
  if (!v.is_number_integer()) throw Error(ErrorCode::kBadCommand, std::string("'") + name + "' must be an integer");
  return v.get<int>();
}

std::vector<std::string> SplitCommaList(const std::string &text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::uint64_t WallClockUs() {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::system_clock::now().time_since_epoch())
          .count());
}

nlohmann::json FramePayload(const ProcessedFrame &frame) {
  const auto &m = frame.meta();
  return {
      {"timestamp_us", m.timestamp_us},
      {"mac", m.source_mac.ToString()},
      {"seq", m.seq},
      {"rssi_dbm", m.rssi_dbm},
      {"rssi_smoothed_dbm", frame.polar.rssi_smoothed_dbm},
      {"n", frame.polar.amplitudes.size()},
      {"order", m.subcarrier_order == SubcarrierOrder::kFft ? "fft" : "linear"},
      {"amplitudes", frame.polar.amplitudes},
      {"phases", frame.polar.phases},
      {"applied_plugins", frame.polar.applied_plugins},
      {"zero_power", frame.polar.zero_power},
  };
}

}  // namespace

Session::Session(SessionOptions options)
    : options_(std::move(options)),
      source_(OpenSource(SourceUri::Parse(options_.source_uri), options_.source_options)),
      pipeline_(options_.chain) {
  view_ranges_["amplitude"] = {0.0, 1e-3};
  view_ranges_["phase"] = {-std::numbers::pi, std::numbers::pi};
}

Session::~Session() {
  StopRecording();
  bridge_.reset();
  commands_.Close();
  std::lock_guard lock(clients_mu_);
  for (auto &[id, c] : clients_) c.queue->Close();
}

// ---------------------------------------------------------------------------
// Clients

ClientId Session::Connect(std::function<void()> notify) {
  ClientId id;
  {
    std::lock_guard lock(clients_mu_);
    id = next_client_++;
    Client c;
    c.queue = std::make_shared<BoundedQueue<std::string>>(options_.client_buffer, OverflowPolicy::kDropOldest);
    c.notify = std::move(notify);
    clients_.emplace(id, std::move(c));
  }
  Send(id, "config", ConfigPayload());
  return id;
}

void Session::Disconnect(ClientId client) {
  std::lock_guard lock(clients_mu_);
  auto it = clients_.find(client);
  if (it == clients_.end()) return;
  it->second.queue->Close();
  clients_.erase(it);
}

std::optional<std::string> Session::TryPop(ClientId client) {
  std::shared_ptr<BoundedQueue<std::string>> q;
  {
    std::lock_guard lock(clients_mu_);
    auto it = clients_.find(client);
    if (it == clients_.end()) return std::nullopt;
    q = it->second.queue;
  }
  return q->TryPop();
}

std::optional<std::string> Session::PopFor(ClientId client, std::chrono::milliseconds timeout) {
  std::shared_ptr<BoundedQueue<std::string>> q;
  {
    std::lock_guard lock(clients_mu_);
    auto it = clients_.find(client);
    if (it == clients_.end()) return std::nullopt;
    q = it->second.queue;
  }
  return q->PopFor(timeout);
}

std::size_t Session::client_dropped(ClientId client) const {
  std::lock_guard lock(clients_mu_);
  auto it = clients_.find(client);
  return it == clients_.end() ? 0 : it->second.queue->dropped();
}

std::size_t Session::client_count() const {
  std::lock_guard lock(clients_mu_);
  return clients_.size();
}

void Session::SendToClient(Client &client, std::string_view kind, const std::string &payload_text) {
  std::string text = "{\"kind\":\"";
  text += kind;
  text += "\",\"seq\":";
  text += std::to_string(++client.next_seq);
  text += ",\"payload\":";
  text += payload_text;
  text += '}';
  client.queue->Push(std::move(text));
  if (client.notify) client.notify();
}

void Session::Send(ClientId client, std::string_view kind, const nlohmann::json &payload) {
  std::lock_guard lock(clients_mu_);
  auto it = clients_.find(client);
  if (it != clients_.end()) SendToClient(it->second, kind, payload.dump());
}

void Session::Broadcast(std::string_view kind, const nlohmann::json &payload) {
  std::lock_guard lock(clients_mu_);
  if (clients_.empty()) return;
  const auto text = payload.dump();
  for (auto &[id, c] : clients_) SendToClient(c, kind, text);
}

void Session::BroadcastFrame(const ProcessedFrame &frame) {
  std::lock_guard lock(clients_mu_);
  if (clients_.empty()) return;
  std::string text;
  for (auto &[id, c] : clients_) {
    if (c.frames_seen++ % c.downsample != 0) continue;
    if (text.empty()) text = FramePayload(frame).dump();
    SendToClient(c, "frame", text);
  }
}

void Session::BroadcastStats() {
  std::vector<ClientId> ids;
  {
    std::lock_guard lock(clients_mu_);
    for (const auto &[id, c] : clients_) ids.push_back(id);
  }
  for (const auto id : ids) Send(id, "stats", StatsPayload(id));
}

// ---------------------------------------------------------------------------
// Payloads

nlohmann::json Session::ConfigPayload() const {
  const auto &chain = pipeline_.config();
  nlohmann::json macs = nlohmann::json::array();
  if (const auto *filter = chain.Find("mac-filter"); filter && filter->enabled) {
    if (auto it = filter->params.find("allowlist"); it != filter->params.end()) {
      for (const auto &m : SplitCommaList(std::get<std::string>(it->second))) macs.push_back(m);
    }
  }
  nlohmann::json views = nlohmann::json::object();
  for (const auto &[plot, r] : view_ranges_) views[plot] = {{"lo", r.lo}, {"hi", r.hi}};
  nlohmann::json recording = nullptr;
  if (recorder_) {
    recording = {{"path", record_path_}, {"format", FormatName(record_format_)}};
  }
  nlohmann::json classifier = nullptr;
  if (bridge_) classifier = {{"command", classifier_cmd_}, {"pid", bridge_->pid()}};
  return {
      {"version", chain.version},
      {"chain", ChainToJson(chain)},
      {"source", source_->uri().ToString()},
      {"mac_filter", macs},
      {"view_ranges", views},
      {"recording", recording},
      {"classifier", classifier},
  };
}

nlohmann::json Session::StatsPayload(std::optional<ClientId> client) const {
  const auto src = source_->stats();
  nlohmann::json stats = {
      {"frames_in", frames_in_},
      {"frames_out", frames_out_},
      {"frames_filtered", pipeline_.frames_dropped()},
      {"pipeline_errors", pipeline_errors_},
      {"source", {{"frames", src.frames}, {"parse_errors", src.parse_errors}, {"dropped", src.dropped}}},
      {"recording", recorder_ != nullptr},
      {"classifications", classifications_},
      {"bridge_alive", bridge_ && bridge_->alive()},
  };
  if (bridge_) {
    stats["bridge"] = {{"frames_sent", bridge_->frames_sent()},
                       {"results", bridge_->results_received()},
                       {"malformed", bridge_->malformed_lines()},
                       {"dropped", bridge_->frames_dropped()}};
  }
  {
    std::lock_guard lock(clients_mu_);
    stats["clients"] = clients_.size();
    if (client) {
      auto it = clients_.find(*client);
      stats["client_dropped"] = it == clients_.end() ? 0 : it->second.queue->dropped();
    }
  }
  return stats;
}

// ---------------------------------------------------------------------------
// Control

void Session::Submit(ClientId client, std::string message) { commands_.Push({client, std::move(message)}); }

void Session::HandlePending(const Pending &pending) {
  nlohmann::json msg;
  try {
    msg = nlohmann::json::parse(pending.message);
  } catch (const nlohmann::json::exception &) {
    Send(pending.client, "error",
         {{"cmd", nullptr}, {"code", ErrorCodeName(ErrorCode::kBadCommand)}, {"message", "not valid JSON"}});
    return;
  }
  Execute(pending.client, msg);
}

void Session::DrainCommands() {
  while (auto pending = commands_.TryPop()) HandlePending(*pending);
}

nlohmann::json Session::Execute(ClientId client, const nlohmann::json &message) {
  nlohmann::json cmd_name = nullptr;
  nlohmann::json reply;
  try {
    if (!message.is_object()) throw Error(ErrorCode::kBadCommand, "control message must be an object");
    cmd_name = message.value("cmd", nlohmann::json(nullptr));
    if (!cmd_name.is_string()) throw Error(ErrorCode::kBadCommand, "missing 'cmd'");
    auto ack = Dispatch(client, cmd_name.get<std::string>(), message);
    ack["cmd"] = cmd_name;
    if (message.contains("req")) ack["req"] = message["req"];
    ack["version"] = pipeline_.config().version;
    reply = {{"kind", "ack"}, {"payload", ack}};
  } catch (const Error &e) {
    nlohmann::json err = {{"cmd", cmd_name}, {"code", ErrorCodeName(e.code())}, {"message", e.message()}};
    if (message.is_object() && message.contains("req")) err["req"] = message["req"];
    reply = {{"kind", "error"}, {"payload", err}};
  }
  Send(client, reply["kind"].get<std::string>(), reply["payload"]);
  if (reply["kind"] == "ack") {
    if (cmd_name == "get_config") {
      Send(client, "config", ConfigPayload());
    } else {
      Broadcast("config", ConfigPayload());
    }
  }
  return reply;
}

void Session::ApplyChain(ChainConfig next) {
  ValidateChain(next, last_shape_.value_or(StageShape{false, SubcarrierOrder::kFft, std::nullopt}));
  pipeline_.SetConfig(std::move(next));
}

nlohmann::json Session::Dispatch(ClientId client, const std::string &cmd, const nlohmann::json &msg) {
  const auto &current = pipeline_.config();

  if (cmd == "set_plugin") {
    const auto id = StringField(msg, "id");
    ChainConfig next = current;
    if (!next.Find(id)) throw Error(ErrorCode::kUnknownPlugin, "no plugin '" + id + "' in the chain");
    if (msg.contains("enabled")) {
      if (!msg["enabled"].is_boolean()) throw Error(ErrorCode::kBadCommand, "'enabled' must be a boolean");
      next = UpdateChain(next, msg["enabled"].get<bool>() ? ConfigCommand::Enable(id) : ConfigCommand::Disable(id));
    }
    if (msg.contains("priority")) next = UpdateChain(next, ConfigCommand::SetPriority(id, IntField(msg, "priority")));
    if (msg.contains("params")) {
      if (!msg["params"].is_object()) throw Error(ErrorCode::kBadCommand, "'params' must be an object");
      for (const auto &[name, value] : msg["params"].items()) {
        next = UpdateChain(next, ConfigCommand::SetParam(id, name, ParamFromJson(value)));
      }
    }
    next.version = current.version + 1;
    ApplyChain(std::move(next));
    return nlohmann::json::object();
  }

  if (cmd == "add_plugin") {
    PluginInstance p;
    p.id = StringField(msg, "id");
    p.kind = msg.contains("kind") ? StringField(msg, "kind") : p.id;
    p.priority = msg.contains("priority") ? IntField(msg, "priority") : 100;
    if (msg.contains("enabled")) {
      if (!msg["enabled"].is_boolean()) throw Error(ErrorCode::kBadCommand, "'enabled' must be a boolean");
      p.enabled = msg["enabled"].get<bool>();
    }
    if (msg.contains("params")) {
      if (!msg["params"].is_object()) throw Error(ErrorCode::kBadCommand, "'params' must be an object");
      for (const auto &[name, value] : msg["params"].items()) p.params[name] = ParamFromJson(value);
    }
    ApplyChain(UpdateChain(current, ConfigCommand::Add(std::move(p))));
    return nlohmann::json::object();
  }

  if (cmd == "remove_plugin") {
    ApplyChain(UpdateChain(current, ConfigCommand::Remove(StringField(msg, "id"))));
    return nlohmann::json::object();
  }

  if (cmd == "set_mac_filter") {
    const auto &list = Field(msg, "macs");
    if (!list.is_array()) throw Error(ErrorCode::kBadCommand, "'macs' must be an array");
    std::string allowlist;
    for (const auto &m : list) {
      const auto mac = m.is_string() ? MacAddress::Parse(m.get<std::string>()) : std::nullopt;
      if (!mac) throw Error(ErrorCode::kBadCommand, "not a MAC address: " + m.dump());
      if (!allowlist.empty()) allowlist += ',';
      allowlist += mac->ToString();
    }
    ChainConfig next = current;
    if (!next.Find("mac-filter")) {
      next = UpdateChain(next, ConfigCommand::Add({"mac-filter", "mac-filter", 0, false, {}}));
    }
    next = UpdateChain(next, ConfigCommand::SetParam("mac-filter", "allowlist", allowlist));
    next = UpdateChain(next, allowlist.empty() ? ConfigCommand::Disable("mac-filter")
                                               : ConfigCommand::Enable("mac-filter"));
    next.version = current.version + 1;
    ApplyChain(std::move(next));
    return nlohmann::json::object();
  }

  if (cmd == "set_source") {
    auto fresh = OpenSource(SourceUri::Parse(StringField(msg, "uri")), options_.source_options);
    source_->Close();
    source_ = std::move(fresh);
    source_ended_ = false;
    last_shape_.reset();
    pipeline_.state() = PipelineState{};
    return nlohmann::json::object();
  }

  if (cmd == "start_record") {
    if (recorder_) throw Error(ErrorCode::kAlreadyRecording, "already recording to " + record_path_);
    const auto path = StringField(msg, "path");
    RecordingMeta meta;
    meta.format = ParseFormat(msg.contains("format") ? StringField(msg, "format") : "binary");
    meta.started_us = WallClockUs();
    meta.chain_version = current.version;
    if (msg.contains("label")) meta.label = StringField(msg, "label");
    std::filesystem::path full = path;
    if (full.is_relative()) full = options_.record_dir / full;
    recorder_ = std::make_unique<AsyncRecorder>(full, meta);
    record_path_ = path;
    record_format_ = meta.format;
    return {{"path", path}};
  }

  if (cmd == "stop_record") {
    if (!recorder_) throw Error(ErrorCode::kNotRecording, "no recording in progress");
    const auto written = recorder_->Stop();
    const auto error = recorder_->error();
    nlohmann::json ack = {{"path", record_path_}, {"frames_written", written}};
    if (error) ack["write_error"] = *error;
    recorder_.reset();
    record_path_.clear();
    return ack;
  }

  if (cmd == "spawn_classifier") {
    const auto command = StringField(msg, "command");
    std::vector<std::string> args;
    if (msg.contains("args")) {
      if (!msg["args"].is_array()) throw Error(ErrorCode::kBadCommand, "'args' must be an array");
      for (const auto &a : msg["args"]) {
        if (!a.is_string()) throw Error(ErrorCode::kBadCommand, "'args' must hold strings");
        args.push_back(a.get<std::string>());
      }
    }
    BridgeOptions opts;
    if (msg.contains("with_phases")) opts.with_phases = msg["with_phases"].is_boolean() && msg["with_phases"].get<bool>();
    auto bridge = std::make_unique<ClassifierBridge>(command, args, opts);
    bridge_ = std::move(bridge);
    classifier_cmd_ = {command};
    classifier_cmd_.insert(classifier_cmd_.end(), args.begin(), args.end());
    return {{"pid", bridge_->pid()}};
  }

  if (cmd == "kill_classifier") {
    if (!bridge_) throw Error(ErrorCode::kNoClassifier, "no classifier running");
    PollClassifier();
    bridge_.reset();
    classifier_cmd_.clear();
    return nlohmann::json::object();
  }

  if (cmd == "set_view_range") {
    const auto plot = msg.contains("plot") ? StringField(msg, "plot") : std::string("amplitude");
    if (!view_ranges_.count(plot)) throw Error(ErrorCode::kBadCommand, "unknown plot '" + plot + "'");
    const double lo = NumberField(msg, "lo"), hi = NumberField(msg, "hi");
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
      throw Error(ErrorCode::kBadCommand, "view range needs lo < hi");
    }
    view_ranges_[plot] = {lo, hi};
    return nlohmann::json::object();
  }

  if (cmd == "set_downsample") {
    const int every = IntField(msg, "every");
    if (every < 1) throw Error(ErrorCode::kBadCommand, "'every' must be at least 1");
    std::lock_guard lock(clients_mu_);
    auto it = clients_.find(client);
    if (it != clients_.end()) it->second.downsample = static_cast<std::size_t>(every);
    return {{"every", every}};
  }

  if (cmd == "get_config") return nlohmann::json::object();

  throw Error(ErrorCode::kUnknownCommand, "unknown command '" + cmd + "'");
}

void Session::StopRecording() {
  if (!recorder_) return;
  recorder_->Stop();
  recorder_.reset();
  record_path_.clear();
}

// ---------------------------------------------------------------------------
// Data path

void Session::PollClassifier() {
  if (!bridge_) return;
  for (const auto &r : bridge_->PollResults()) {
    ++classifications_;
    Broadcast("classification",
              {{"class", r.class_id}, {"confidence", r.confidence}, {"window_end_us", r.window_end_us}});
  }
}

bool Session::Step() {
  DrainCommands();
  if (source_ended_) {
    PollClassifier();
    return false;
  }
  NextResult next;
  try {
    next = source_->Next(options_.source_poll);
  } catch (const Error &) {
    next.status = NextStatus::kEndOfStream;
  }
  if (next.status == NextStatus::kEndOfStream) {
    source_ended_ = true;
    PollClassifier();
    BroadcastStats();
    return false;
  }
  if (next.status == NextStatus::kFrame) {
    const auto &frame = *next.frame;
    ++frames_in_;
    last_shape_ = StageShape{false, frame.subcarrier_order, frame.n_subcarriers()};
    try {
      if (auto out = pipeline_.Process(frame)) {
        ++frames_out_;
        BroadcastFrame(*out);
        if (recorder_) recorder_->Push(*out);
        if (bridge_) {
          try {
            bridge_->SendFrame(*out);
          } catch (const Error &) {
            // The child is gone; stats report bridge_alive=false until it is killed or replaced.
          }
        }
      }
    } catch (const Error &) {
      ++pipeline_errors_;
    }
    if (frames_in_ % options_.stats_every == 0) BroadcastStats();
  }
  PollClassifier();
  return true;
}

void Session::Run(const std::atomic<bool> &stop) {
  while (!stop) {
    if (!Step()) {
      // Keep serving control commands (e.g. set_source) after the stream ends.
      if (auto pending = commands_.PopFor(options_.source_poll)) HandlePending(*pending);
    }
  }
}

}  // namespace csiscope
