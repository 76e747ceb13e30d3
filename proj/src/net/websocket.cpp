#include "rems/net/websocket.hpp"

#include <atomic>
#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <deque>
#include <future>
#include <map>
#include <mutex>
#include <thread>

#include "rems/error.hpp"

namespace rems::net {
namespace {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

std::string path_of(std::string_view target) {
  const auto q = target.find('?');
  return std::string(target.substr(0, q));
}

}  // namespace

// ---------------------------------------------------------------- server

struct WsServer::Impl : std::enable_shared_from_this<WsServer::Impl> {
  struct Session;

  asio::io_context io;
  tcp::acceptor acceptor{io};
  std::string path;
  ServerHandlers handlers;
  std::size_t max_queue;
  std::map<SessionId, std::shared_ptr<Session>> sessions;  // io thread only
  std::atomic<std::size_t> open_count{0};
  SessionId next_id = 1;
  std::thread thread;
  std::atomic<bool> stopped{false};
  std::uint16_t bound_port = 0;

  struct Session : std::enable_shared_from_this<Session> {
    Session(Impl& owner, SessionId id, tcp::socket socket) : owner(owner), id(id), ws(std::move(socket)) {}

    Impl& owner;
    SessionId id;
    websocket::stream<beast::tcp_stream> ws;
    beast::flat_buffer buffer;
    http::request<http::string_body> request;
    http::response<http::string_body> rejection;
    std::deque<std::string> outbox;
    bool writing = false;
    bool open = false;
    bool closed = false;

    void start() {
      beast::get_lowest_layer(ws).expires_after(std::chrono::seconds(10));
      http::async_read(beast::get_lowest_layer(ws), buffer, request,
                       [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_request(ec); });
    }

    void on_request(beast::error_code ec) {
      if (ec) return finish();
      if (!websocket::is_upgrade(request) || path_of(std::string_view(request.target().data(), request.target().size())) != owner.path) {
        rejection = http::response<http::string_body>(http::status::not_found, request.version());
        rejection.set(http::field::content_type, "text/plain");
        rejection.body() = "websocket endpoint is " + owner.path + "\n";
        rejection.prepare_payload();
        http::async_write(beast::get_lowest_layer(ws), rejection,
                          [self = shared_from_this()](beast::error_code, std::size_t) {
                            beast::error_code ignored;
                            beast::get_lowest_layer(self->ws).socket().shutdown(tcp::socket::shutdown_both, ignored);
                            self->finish();
                          });
        return;
      }
      beast::get_lowest_layer(ws).expires_never();
      ws.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
      ws.async_accept(request, [self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
    }

    void on_accept(beast::error_code ec) {
      if (ec) return finish();
      open = true;
      ++owner.open_count;
      if (owner.handlers.on_open) owner.handlers.on_open(id);
      read();
    }

    void read() {
      buffer.clear();
      ws.async_read(buffer, [self = shared_from_this()](beast::error_code ec, std::size_t) {
        if (ec) return self->finish();
        if (self->owner.handlers.on_message) self->owner.handlers.on_message(self->id, beast::buffers_to_string(self->buffer.data()));
        if (!self->closed) self->read();
      });
    }

    void send(std::string text) {
      if (!open || closed) return;
      if (owner.max_queue > 0 && outbox.size() >= owner.max_queue) {
        // Slow consumer: drop it rather than buffer without bound.
        return abort();
      }
      outbox.push_back(std::move(text));
      if (!writing) write_next();
    }

    void write_next() {
      if (outbox.empty() || closed) {
        writing = false;
        return;
      }
      writing = true;
      ws.text(true);
      ws.async_write(asio::buffer(outbox.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
        if (ec) return self->finish();
        self->outbox.pop_front();
        self->write_next();
      });
    }

    void abort() {
      beast::error_code ignored;
      beast::get_lowest_layer(ws).socket().close(ignored);
      finish();
    }

    void close_gracefully() {
      if (!open || closed) return abort();
      ws.async_close(websocket::close_code::normal, [self = shared_from_this()](beast::error_code) { self->abort(); });
    }

    void finish() {
      if (closed) return;
      closed = true;
      auto keep = shared_from_this();
      owner.sessions.erase(id);
      if (open) {
        --owner.open_count;
        if (owner.handlers.on_close) owner.handlers.on_close(id);
      }
    }
  };

  void accept() {
    acceptor.async_accept([self = shared_from_this()](beast::error_code ec, tcp::socket socket) {
      if (ec) return;  // acceptor closed
      auto session = std::make_shared<Session>(*self, self->next_id++, std::move(socket));
      self->sessions.emplace(session->id, session);
      session->start();
      self->accept();
    });
  }

  template <typename F>
  void on_io(F&& f) {
    asio::post(io, [self = shared_from_this(), f = std::forward<F>(f)]() mutable { f(*self); });
  }
};

WsServer::WsServer(const std::string& host, std::uint16_t port, std::string path, ServerHandlers handlers,
                   std::size_t max_queue)
    : impl_(std::make_shared<Impl>()) {
  impl_->path = std::move(path);
  impl_->handlers = std::move(handlers);
  impl_->max_queue = max_queue;
  try {
    const tcp::endpoint ep(asio::ip::make_address(host), port);
    impl_->acceptor.open(ep.protocol());
    impl_->acceptor.set_option(asio::socket_base::reuse_address(true));
    impl_->acceptor.bind(ep);
    impl_->acceptor.listen();
    impl_->bound_port = impl_->acceptor.local_endpoint().port();
  } catch (const std::exception& e) {
    throw Error(ErrorKind::io_error, "cannot listen on " + host + ":" + std::to_string(port) + ": " + e.what());
  }
  impl_->accept();
  impl_->thread = std::thread([impl = impl_] { impl->io.run(); });
}

WsServer::~WsServer() { stop(); }

std::uint16_t WsServer::port() const noexcept { return impl_->bound_port; }

void WsServer::send(SessionId id, std::string text) {
  impl_->on_io([id, text = std::move(text)](Impl& impl) mutable {
    auto it = impl.sessions.find(id);
    if (it != impl.sessions.end()) it->second->send(std::move(text));
  });
}

void WsServer::broadcast(const std::string& text) {
  impl_->on_io([text](Impl& impl) {
    std::vector<std::shared_ptr<Impl::Session>> all;
    for (auto& [id, s] : impl.sessions) all.push_back(s);
    for (auto& s : all) s->send(text);
  });
}

void WsServer::close(SessionId id) {
  impl_->on_io([id](Impl& impl) {
    auto it = impl.sessions.find(id);
    if (it != impl.sessions.end()) it->second->close_gracefully();
  });
}

std::size_t WsServer::session_count() const { return impl_->open_count.load(); }

void WsServer::stop() {
  if (impl_->stopped.exchange(true)) return;
  std::promise<void> done;
  auto fut = done.get_future();
  impl_->on_io([&done](Impl& impl) {
    beast::error_code ignored;
    impl.acceptor.close(ignored);
    std::vector<std::shared_ptr<Impl::Session>> all;
    for (auto& [id, s] : impl.sessions) all.push_back(s);
    for (auto& s : all) s->abort();
    done.set_value();
  });
  fut.wait_for(std::chrono::seconds(2));
  impl_->io.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

// ---------------------------------------------------------------- client

struct WsClient::Impl : std::enable_shared_from_this<WsClient::Impl> {
  asio::io_context io;
  asio::executor_work_guard<asio::io_context::executor_type> work{io.get_executor()};
  tcp::resolver resolver{io};
  websocket::stream<beast::tcp_stream> ws{io};
  beast::flat_buffer buffer;
  std::deque<std::string> outbox;
  bool writing = false;
  std::atomic<bool> open{false};
  bool closed = false;
  ClientHandlers handlers;
  std::thread thread;
  std::string host;

  void read() {
    ws.async_read(buffer, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->finish(ec.message());
      std::string text = beast::buffers_to_string(self->buffer.data());
      self->buffer.clear();
      if (self->handlers.on_message) self->handlers.on_message(std::move(text));
      self->read();
    });
  }

  void write_next() {
    if (outbox.empty() || closed) {
      writing = false;
      return;
    }
    writing = true;
    ws.text(true);
    ws.async_write(asio::buffer(outbox.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->finish(ec.message());
      self->outbox.pop_front();
      self->write_next();
    });
  }

  void finish(const std::string& reason) {
    if (closed) return;
    closed = true;
    const bool was_open = open.exchange(false);
    beast::error_code ignored;
    beast::get_lowest_layer(ws).socket().close(ignored);
    if (was_open && handlers.on_close) handlers.on_close(reason);
  }
};

WsClient::WsClient(ClientHandlers handlers) : impl_(std::make_shared<Impl>()) {
  impl_->handlers = std::move(handlers);
  impl_->thread = std::thread([impl = impl_] { impl->io.run(); });
}

WsClient::~WsClient() {
  close();
  impl_->work.reset();
  impl_->io.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

void WsClient::connect(const std::string& host, std::uint16_t port, const std::string& target,
                       std::chrono::milliseconds timeout) {
  auto result = std::make_shared<std::promise<std::string>>();
  auto fut = result->get_future();
  auto impl = impl_;
  asio::post(impl->io, [impl, result, host, port, target, timeout] {
    impl->host = host + ":" + std::to_string(port);
    impl->resolver.async_resolve(
        host, std::to_string(port),
        [impl, result, target, timeout](beast::error_code ec, tcp::resolver::results_type results) {
          if (ec) return result->set_value(ec.message());
          beast::get_lowest_layer(impl->ws).expires_after(timeout);
          beast::get_lowest_layer(impl->ws).async_connect(
              results, [impl, result, target](beast::error_code ec, const tcp::endpoint&) {
                if (ec) return result->set_value(ec.message());
                impl->ws.async_handshake(impl->host, target, [impl, result](beast::error_code ec) {
                  if (ec) return result->set_value(ec.message());
                  beast::get_lowest_layer(impl->ws).expires_never();
                  impl->ws.set_option(websocket::stream_base::timeout::suggested(beast::role_type::client));
                  impl->open = true;
                  result->set_value("");
                  impl->read();
                });
              });
        });
  });
  if (fut.wait_for(timeout + std::chrono::milliseconds(200)) != std::future_status::ready) {
    asio::post(impl->io, [impl] { impl->finish("connect timeout"); });
    throw Error(ErrorKind::connection_lost, "timed out connecting to " + host + ":" + std::to_string(port));
  }
  const std::string err = fut.get();
  if (!err.empty()) {
    throw Error(ErrorKind::connection_lost, "cannot connect to " + host + ":" + std::to_string(port) + ": " + err);
  }
}

void WsClient::send(std::string text) {
  asio::post(impl_->io, [impl = impl_, text = std::move(text)]() mutable {
    if (!impl->open || impl->closed) return;
    impl->outbox.push_back(std::move(text));
    if (!impl->writing) impl->write_next();
  });
}

void WsClient::close() {
  auto done = std::make_shared<std::promise<void>>();
  auto fut = done->get_future();
  asio::post(impl_->io, [impl = impl_, done] {
    if (!impl->open || impl->closed) return done->set_value();
    impl->ws.async_close(websocket::close_code::normal, [impl, done](beast::error_code) {
      impl->finish("closed by client");
      done->set_value();
    });
  });
  fut.wait_for(std::chrono::milliseconds(500));
}

bool WsClient::is_open() const noexcept { return impl_->open.load(); }

}  // namespace rems::net
