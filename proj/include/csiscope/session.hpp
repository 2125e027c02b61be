#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

#include "csiscope/bounded_queue.hpp"
#include "csiscope/bridge.hpp"
#include "csiscope/chain_config.hpp"
#include "csiscope/pipeline.hpp"
#include "csiscope/recording.hpp"
#include "csiscope/source.hpp"

namespace csiscope {

using ClientId = std::uint64_t;

struct SessionOptions {
  std::string source_uri{"synth://idle"};
  ChainConfig chain{DefaultChain()};
  SourceOptions source_options{};
  /// Envelopes buffered per client before the oldest are dropped.
  std::size_t client_buffer{256};
  /// A stats envelope goes out after this many source frames.
  std::size_t stats_every{9};
  /// Relative start_record paths resolve against this directory.
  std::filesystem::path record_dir{"."};
  std::chrono::milliseconds source_poll{50};
};

struct ViewRange {
  double lo{0.0};
  double hi{1.0};
};

/// One operator session: a source feeding the pipeline, with fan-out to
/// connected clients, an optional recorder and an optional classifier.
///
/// Every envelope is {"kind", "seq", "payload"} with kind one of frame,
/// classification, config, stats, ack, error; seq counts envelopes per client.
/// Step(), Execute() and Submit()-queued commands are meant for one session
/// thread; Connect/Disconnect/Pop may be called from any thread.
class Session {
 public:
  /// Throws whatever OpenSource throws for the initial source.
  explicit Session(SessionOptions options);
  /// Stops the recorder (flushing it) and reaps the classifier.
  ~Session();
  Session(const Session &) = delete;
  Session &operator=(const Session &) = delete;

  /// The new client immediately receives a config envelope. `notify` is
  /// invoked (from the session thread) whenever an envelope is queued.
  ClientId Connect(std::function<void()> notify = {});
  void Disconnect(ClientId client);
  std::optional<std::string> TryPop(ClientId client);
  std::optional<std::string> PopFor(ClientId client, std::chrono::milliseconds timeout);
  [[nodiscard]] std::size_t client_dropped(ClientId client) const;
  [[nodiscard]] std::size_t client_count() const;

  /// Queues a raw control message for the session thread.
  void Submit(ClientId client, std::string message);

  /// Runs one control command now. The sender gets an ack or error envelope;
  /// on success every client gets a config envelope. Returns the reply.
  nlohmann::json Execute(ClientId client, const nlohmann::json &message);

  /// Runs queued commands, then pulls at most one frame through the chain
  /// and fans it out. Returns false once the source has ended.
  bool Step();
  /// Steps until `stop` is set. After the source ends it keeps serving
  /// control commands, so set_source can start a new stream.
  void Run(const std::atomic<bool> &stop);

  [[nodiscard]] nlohmann::json ConfigPayload() const;
  [[nodiscard]] nlohmann::json StatsPayload(std::optional<ClientId> client = std::nullopt) const;
  [[nodiscard]] const ChainConfig &chain() const { return pipeline_.config(); }

 private:
  struct Client {
    std::shared_ptr<BoundedQueue<std::string>> queue;
    std::function<void()> notify;
    std::uint64_t next_seq{0};
    std::size_t downsample{1};
    std::uint64_t frames_seen{0};
  };
  struct Pending {
    ClientId client;
    std::string message;
  };

  void Send(ClientId client, std::string_view kind, const nlohmann::json &payload);
  void SendToClient(Client &client, std::string_view kind, const std::string &payload_text);
  void Broadcast(std::string_view kind, const nlohmann::json &payload);
  void BroadcastFrame(const ProcessedFrame &frame);
  void BroadcastStats();
  void PollClassifier();
  void HandlePending(const Pending &pending);
  void DrainCommands();

  nlohmann::json Dispatch(ClientId client, const std::string &cmd, const nlohmann::json &msg);
  void ApplyChain(ChainConfig next);
  void StopRecording();

  SessionOptions options_;
  std::unique_ptr<FrameSource> source_;
  bool source_ended_{false};
  Pipeline pipeline_;
  std::optional<StageShape> last_shape_;

  std::unique_ptr<AsyncRecorder> recorder_;
  std::string record_path_;
  RecordingFormat record_format_{RecordingFormat::kBinary};
  std::unique_ptr<ClassifierBridge> bridge_;
  std::vector<std::string> classifier_cmd_;
  std::map<std::string, ViewRange> view_ranges_;

  std::uint64_t frames_in_{0};
  std::uint64_t frames_out_{0};
  std::uint64_t pipeline_errors_{0};
  std::uint64_t classifications_{0};

  mutable std::mutex clients_mu_;
  std::map<ClientId, Client> clients_;
  ClientId next_client_{1};

  BoundedQueue<Pending> commands_{1024, OverflowPolicy::kBlock};
};

}  // namespace csiscope
