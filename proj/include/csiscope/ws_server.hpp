#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "csiscope/session.hpp"

namespace csiscope {

/// WebSocket front end for a Session. Clients connect to ws://host:port/ws
/// and get one JSON envelope per text message; text messages they send are
/// queued as control commands. Any other target gets a 404.
///
/// The server runs its own I/O thread; the session must be driven separately
/// (Session::Run) and must outlive the server.
class WsServer {
 public:
  /// Binds immediately. Port 0 picks a free port. Throws Error(kBindFailed).
  WsServer(Session &session, const std::string &host, std::uint16_t port);
  ~WsServer();
  WsServer(const WsServer &) = delete;
  WsServer &operator=(const WsServer &) = delete;

  [[nodiscard]] std::uint16_t port() const;
  void Start();
  /// Closes every connection and joins the I/O thread. Idempotent.
  void Stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace csiscope
