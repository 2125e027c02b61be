// csiscope command line: serve, record, replay, eval, synth.

#include <CLI11.hpp>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <thread>

#include "csiscope/batch.hpp"
#include "csiscope/error.hpp"
#include "csiscope/pcap.hpp"
#include "csiscope/session.hpp"
#include "csiscope/source.hpp"
#include "csiscope/synth.hpp"
#include "csiscope/wire_codec.hpp"
#include "csiscope/ws_server.hpp"

using namespace csiscope;

namespace {

std::atomic<bool> g_stop{false};

void OnSignal(int) { g_stop = true; }

void InstallSignalHandlers() {
  std::signal(SIGINT, OnSignal);
  std::signal(SIGTERM, OnSignal);
}

std::pair<std::string, std::uint16_t> SplitHostPort(const std::string &text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos) throw CLI::ValidationError("expected host:port, got '" + text + "'");
  const auto port = std::stoul(text.substr(colon + 1));
  if (port > 65535) throw CLI::ValidationError("port out of range in '" + text + "'");
  return {text.substr(0, colon), static_cast<std::uint16_t>(port)};
}

std::uint64_t WallClockUs() {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::system_clock::now().time_since_epoch())
          .count());
}

struct ServeArgs {
  std::string source{"synth://idle?mode=realtime"};
  std::string listen{"127.0.0.1:8765"};
  std::string chain;
  std::string record_dir{"."};
  std::size_t client_buffer{256};
};

int Serve(const ServeArgs &args) {
  SessionOptions opts;
  opts.source_uri = args.source;
  if (!args.chain.empty()) opts.chain = LoadChainFile(args.chain);
  opts.record_dir = args.record_dir;
  opts.client_buffer = args.client_buffer;
  Session session(opts);
  const auto [host, port] = SplitHostPort(args.listen);
  WsServer server(session, host, port);
  server.Start();
  std::fprintf(stderr, "csiscope: serving %s on ws://%s:%u/ws\n", args.source.c_str(), host.c_str(),
               static_cast<unsigned>(server.port()));
  InstallSignalHandlers();
  session.Run(g_stop);
  server.Stop();
  return 0;
}

struct RecordArgs {
  std::string source;
  std::string out;
  std::string format{"binary"};
  std::string label;
  std::string chain;
  std::size_t frames{0};
};

int Record(const RecordArgs &args) {
  RecordingMeta meta;
  meta.format = ParseFormat(args.format);
  meta.started_us = WallClockUs();
  if (!args.label.empty()) meta.label = args.label;
  const auto chain = args.chain.empty() ? DefaultChain() : LoadChainFile(args.chain);
  InstallSignalHandlers();
  const auto written = RecordFromSource(args.source, chain, args.out, meta,
                                        args.frames ? std::optional(args.frames) : std::nullopt, &g_stop);
  std::fprintf(stderr, "csiscope: wrote %zu frames to %s\n", written, args.out.c_str());
  return 0;
}

struct ReplayArgs {
  std::string source;
  std::string to{"127.0.0.1:5500"};
  bool fast{false};
};

// Sends one WEF1 datagram per frame, paced by the frame timestamps unless
// --fast is given.
int Replay(const ReplayArgs &args) {
  auto source = OpenSource(SourceUri::Parse(args.source));
  const auto [host, port] = SplitHostPort(args.to);
  sockaddr_in dst{};
  dst.sin_family = AF_INET;
  dst.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &dst.sin_addr) != 1) throw CLI::ValidationError("bad IPv4 address " + host);
  const int fd = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd < 0) throw Error(ErrorCode::kIoError, "socket() failed");

  InstallSignalHandlers();
  std::optional<std::uint64_t> first_ts;
  const auto wall_start = std::chrono::steady_clock::now();
  std::size_t sent = 0;
  while (!g_stop) {
    auto next = source->Next(std::chrono::milliseconds(100));
    if (next.status == NextStatus::kEndOfStream) break;
    if (next.status != NextStatus::kFrame) continue;
    const auto &frame = *next.frame;
    if (!args.fast) {
      if (!first_ts) first_ts = frame.timestamp_us;
      const auto offset = frame.timestamp_us >= *first_ts ? frame.timestamp_us - *first_ts : 0;
      std::this_thread::sleep_until(wall_start + std::chrono::microseconds(offset));
    }
    const auto bytes = EncodeWireFrame(frame);
    if (::sendto(fd, bytes.data(), bytes.size(), 0, reinterpret_cast<const sockaddr *>(&dst), sizeof dst) < 0) {
      std::perror("csiscope: sendto");
    } else {
      ++sent;
    }
  }
  ::close(fd);
  std::fprintf(stderr, "csiscope: sent %zu frames to %s\n", sent, args.to.c_str());
  return 0;
}

struct EvalArgs {
  std::string model;
  std::string data;
  bool json{false};
};

int Eval(const EvalArgs &args) {
  const auto model = LoadModel(args.model);
  const auto files = ListRecordings(args.data);
  if (files.empty()) throw Error(ErrorCode::kFileNotFound, "no recordings in " + args.data);
  const auto result = EvaluateRecordings(model, files);
  const auto &r = result.report;
  if (args.json) {
    nlohmann::json doc = {{"macro_f1", r.macro_f1}, {"windows", result.labels.size()}, {"confusion", r.confusion}};
    for (std::size_t c = 0; c < r.classes.size(); ++c) {
      doc["classes"].push_back({{"name", c < model.class_names.size() ? model.class_names[c] : std::to_string(c)},
                                {"precision", r.classes[c].precision},
                                {"recall", r.classes[c].recall},
                                {"f1", r.classes[c].f1}});
    }
    std::printf("%s\n", doc.dump(2).c_str());
    return 0;
  }
  std::printf("%-16s %9s %9s %9s\n", "class", "precision", "recall", "f1");
  for (std::size_t c = 0; c < r.classes.size(); ++c) {
    const auto name = c < model.class_names.size() ? model.class_names[c] : std::to_string(c);
    std::printf("%-16s %9.3f %9.3f %9.3f\n", name.c_str(), r.classes[c].precision, r.classes[c].recall,
                r.classes[c].f1);
  }
  std::printf("macro F1 %.4f over %zu windows\n", r.macro_f1, result.labels.size());
  return 0;
}

struct SynthArgs {
  std::string profile{"idle"};
  std::string out;
  double seconds{10.0};
  std::uint64_t seed{1};
  std::optional<double> noise;
};

int Synth(const SynthArgs &args) {
  auto profile = ShippedProfile(args.profile);
  profile.rng_seed = args.seed;
  if (args.noise) profile.noise_sigma = *args.noise;
  ValidateProfile(profile);
  std::ofstream file(args.out, std::ios::binary);
  if (!file) throw Error(ErrorCode::kIoError, "cannot write " + args.out);
  PcapWriter writer(file);
  const auto period = FramePeriodUs(profile.frame_rate_hz);
  const auto count = static_cast<std::uint64_t>(args.seconds * profile.frame_rate_hz);
  constexpr std::uint64_t kStartUs = 1'700'000'000'000'000;
  for (std::uint64_t i = 0; i < count; ++i) {
    auto frame = GenerateSyntheticFrame(profile, kStartUs + i * period);
    frame.seq = static_cast<std::uint16_t>(i & 0xffff);
    writer.WriteFrame(frame);
  }
  std::fprintf(stderr, "csiscope: wrote %llu %s frames to %s\n", static_cast<unsigned long long>(count),
               args.profile.c_str(), args.out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"csiscope: CSI capture, processing and streaming"};
  app.require_subcommand(1);

  ServeArgs serve;
  auto *serve_cmd = app.add_subcommand("serve", "run a session and stream it over WebSocket at /ws");
  serve_cmd->add_option("--source", serve.source, "source URI (udp://, pcap://, synth://)");
  serve_cmd->add_option("--listen", serve.listen, "address:port to listen on");
  serve_cmd->add_option("--chain", serve.chain, "chain config JSON")->check(CLI::ExistingFile);
  serve_cmd->add_option("--record-dir", serve.record_dir, "directory for relative start_record paths");
  serve_cmd->add_option("--client-buffer", serve.client_buffer, "envelopes buffered per client")
      ->check(CLI::PositiveNumber);

  RecordArgs record;
  auto *record_cmd = app.add_subcommand("record", "process a source into a recording");
  record_cmd->add_option("--source", record.source, "source URI")->required();
  record_cmd->add_option("--out", record.out, "recording path")->required();
  record_cmd->add_option("--format", record.format, "binary, csv-simple or csv-compact");
  record_cmd->add_option("--label", record.label, "class label stored in the sidecar");
  record_cmd->add_option("--chain", record.chain, "chain config JSON")->check(CLI::ExistingFile);
  record_cmd->add_option("--frames", record.frames, "stop after this many frames (0 = until the source ends)");

  ReplayArgs replay;
  auto *replay_cmd = app.add_subcommand("replay", "send a source as WEF1 datagrams over UDP");
  replay_cmd->add_option("--source", replay.source, "source URI, typically pcap://file")->required();
  replay_cmd->add_option("--to", replay.to, "destination IPv4 address:port");
  replay_cmd->add_flag("--fast", replay.fast, "ignore frame timestamps and send as fast as possible");

  EvalArgs eval;
  auto *eval_cmd = app.add_subcommand("eval", "score a centroid model against labelled recordings");
  eval_cmd->add_option("--model", eval.model, "model JSON")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--data", eval.data, "directory of recordings")->required()->check(CLI::ExistingDirectory);
  eval_cmd->add_flag("--json", eval.json, "print the report as JSON");

  SynthArgs synth;
  auto *synth_cmd = app.add_subcommand("synth", "write a synthetic capture as pcap");
  synth_cmd->add_option("--profile", synth.profile, "idle, pattern-a, pattern-b or pattern-c");
  synth_cmd->add_option("--out", synth.out, "pcap path")->required();
  synth_cmd->add_option("--seconds", synth.seconds, "capture length")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--seed", synth.seed, "noise seed");
  synth_cmd->add_option("--noise", synth.noise, "override the profile noise sigma");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve_cmd) return Serve(serve);
    if (*record_cmd) return Record(record);
    if (*replay_cmd) return Replay(replay);
    if (*eval_cmd) return Eval(eval);
    if (*synth_cmd) return Synth(synth);
  } catch (const CLI::Error &e) {
    return app.exit(e);
  } catch (const std::exception &e) {
    std::fprintf(stderr, "csiscope: %s\n", e.what());
    return 1;
  }
  return 0;
}
