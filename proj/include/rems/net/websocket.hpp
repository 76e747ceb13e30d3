#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>

namespace rems::net {

using SessionId = std::uint64_t;

struct ServerHandlers {
  std::function<void(SessionId)> on_open;
  std::function<void(SessionId, std::string)> on_message;
  std::function<void(SessionId)> on_close;
};

/// WebSocket server on one path, running on its own I/O thread. Handlers are
/// called on that thread. Requests for other paths get a 404.
class WsServer {
 public:
  /// Port 0 picks a free port. Throws IoError when the address cannot be bound.
  /// A session whose send queue exceeds `max_queue` frames is dropped
  /// (0 = unbounded).
  WsServer(const std::string& host, std::uint16_t port, std::string path, ServerHandlers handlers,
           std::size_t max_queue = 0);
  ~WsServer();
  WsServer(const WsServer&) = delete;
  WsServer& operator=(const WsServer&) = delete;

  std::uint16_t port() const noexcept;
  /// Thread-safe; silently ignored for closed sessions.
  void send(SessionId id, std::string text);
  void broadcast(const std::string& text);
  void close(SessionId id);
  std::size_t session_count() const;
  void stop();

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

struct ClientHandlers {
  std::function<void(std::string)> on_message;
  std::function<void(std::string reason)> on_close;
};

/// WebSocket client on its own I/O thread.
class WsClient {
 public:
  explicit WsClient(ClientHandlers handlers);
  ~WsClient();
  WsClient(const WsClient&) = delete;
  WsClient& operator=(const WsClient&) = delete;

  /// Throws ConnectionLost when the handshake does not finish in time.
  void connect(const std::string& host, std::uint16_t port, const std::string& target,
               std::chrono::milliseconds timeout);
  /// Thread-safe, queued.
  void send(std::string text);
  void close();
  bool is_open() const noexcept;

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

}  // namespace rems::net
