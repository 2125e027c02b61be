#include "csiscope/ws_server.hpp"

#include <atomic>
#include <mutex>
#include <set>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast.hpp>

#include "csiscope/error.hpp"

namespace csiscope {
namespace {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

class Connection;

struct Registry {
  std::mutex mu;
  std::set<std::shared_ptr<Connection>> live;
};

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, Session &session, Registry &registry)
      : strand_(socket.get_executor()),
        http_(std::move(socket)),
        session_(session),
        registry_(registry) {}

  void Start() {
    net::dispatch(strand_, [self = shared_from_this()] { self->ReadRequest(); });
  }

  void Close() {
    net::post(strand_, [self = shared_from_this()] { self->Shutdown(); });
  }

  void Abandon() { Finish(); }

 private:
  void ReadRequest() {
    http::async_read(http_, buffer_, request_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) { self->OnRequest(ec); });
  }

  void OnRequest(beast::error_code ec) {
    if (ec) return Finish();
    if (request_.target() != "/ws" || !websocket::is_upgrade(request_)) return NotFound();
    ws_.emplace(std::move(http_));
    ws_->set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_->async_accept(request_, [self = shared_from_this()](beast::error_code ec2) { self->OnAccept(ec2); });
  }

  void NotFound() {
    auto res = std::make_shared<http::response<http::string_body>>(http::status::not_found, request_.version());
    res->set(http::field::content_type, "text/plain");
    res->body() = "not found; the stream lives at /ws\n";
    res->keep_alive(false);
    res->prepare_payload();
    http::async_write(http_, *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
      beast::error_code ignored;
      self->http_.socket().shutdown(tcp::socket::shutdown_send, ignored);
      self->Finish();
    });
  }

  void OnAccept(beast::error_code ec) {
    if (ec) return Finish();
    std::weak_ptr<Connection> weak = shared_from_this();
    auto strand = strand_;
    // Called from the session thread; only hops onto this connection's strand.
    client_ = session_.Connect([weak, strand] {
      net::post(strand, [weak] {
        if (auto self = weak.lock()) self->Pump();
      });
    });
    Read();
    Pump();
  }

  void Read() {
    ws_->async_read(in_, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->OnRead(ec); });
  }

  void OnRead(beast::error_code ec) {
    if (ec) return Finish();
    if (ws_->got_text()) session_.Submit(*client_, beast::buffers_to_string(in_.data()));
    in_.consume(in_.size());
    Read();
  }

  void Pump() {
    if (writing_ || !client_ || finished_) return;
    auto next = session_.TryPop(*client_);
    if (!next) return;
    out_ = std::move(*next);
    writing_ = true;
    ws_->text(true);
    ws_->async_write(net::buffer(out_), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->writing_ = false;
      if (ec) return self->Finish();
      self->Pump();
    });
  }

  void Shutdown() {
    if (finished_) return;
    if (ws_ && ws_->is_open()) {
      ws_->async_close(websocket::close_code::going_away,
                       [self = shared_from_this()](beast::error_code) { self->Finish(); });
    } else {
      beast::error_code ignored;
      http_.socket().close(ignored);
      Finish();
    }
  }

  void Finish() {
    if (finished_) return;
    finished_ = true;
    if (client_) session_.Disconnect(*client_);
    if (ws_) {
      beast::get_lowest_layer(*ws_).cancel();
    } else {
      http_.cancel();
    }
    std::lock_guard lock(registry_.mu);
    registry_.live.erase(shared_from_this());
  }

  // The accepted socket already runs on its own strand.
  net::any_io_executor strand_;
  beast::tcp_stream http_;
  std::optional<websocket::stream<beast::tcp_stream>> ws_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> request_;
  beast::flat_buffer in_;
  std::string out_;
  bool writing_{false};
  bool finished_{false};
  std::optional<ClientId> client_;
  Session &session_;
  Registry &registry_;
};

}  // namespace

struct WsServer::Impl {
  Impl(Session &s) : session(s), acceptor(ioc) {}

  void Accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      auto conn = std::make_shared<Connection>(std::move(socket), session, registry);
      {
        std::lock_guard lock(registry.mu);
        registry.live.insert(conn);
      }
      conn->Start();
      Accept();
    });
  }

  Session &session;
  net::io_context ioc{1};
  tcp::acceptor acceptor;
  Registry registry;
  std::thread thread;
  std::atomic<bool> running{false};
};

WsServer::WsServer(Session &session, const std::string &host, std::uint16_t port)
    : impl_(std::make_unique<Impl>(session)) {
  beast::error_code ec;
  const auto address = net::ip::make_address(host, ec);
  if (ec) throw Error(ErrorCode::kBindFailed, "bad listen address '" + host + "'");
  const tcp::endpoint endpoint(address, port);
  auto &acc = impl_->acceptor;
  acc.open(endpoint.protocol(), ec);
  if (!ec) acc.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) acc.bind(endpoint, ec);
  if (!ec) acc.listen(net::socket_base::max_listen_connections, ec);
  if (ec) throw Error(ErrorCode::kBindFailed, host + ":" + std::to_string(port) + ": " + ec.message());
}

WsServer::~WsServer() { Stop(); }

std::uint16_t WsServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void WsServer::Start() {
  if (impl_->running.exchange(true)) return;
  impl_->Accept();
  impl_->thread = std::thread([this] { impl_->ioc.run(); });
}

void WsServer::Stop() {
  if (!impl_ || !impl_->running.exchange(false)) return;
  net::post(impl_->ioc, [this] {
    beast::error_code ignored;
    impl_->acceptor.close(ignored);
    std::vector<std::shared_ptr<Connection>> live;
    {
      std::lock_guard lock(impl_->registry.mu);
      live.assign(impl_->registry.live.begin(), impl_->registry.live.end());
    }
    for (auto &c : live) c->Close();
  });
  // Give close handshakes a moment, then stop regardless.
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(500);
  while (std::chrono::steady_clock::now() < deadline) {
    {
      std::lock_guard lock(impl_->registry.mu);
      if (impl_->registry.live.empty()) break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  impl_->ioc.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
  std::vector<std::shared_ptr<Connection>> stragglers;
  {
    std::lock_guard lock(impl_->registry.mu);
    stragglers.assign(impl_->registry.live.begin(), impl_->registry.live.end());
  }
  // The I/O thread is gone, so finishing from here cannot race a handler.
  for (auto &c : stragglers) c->Abandon();
}

}  // namespace csiscope
