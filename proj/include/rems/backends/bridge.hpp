#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "rems/backends/backend.hpp"
#include "rems/backends/bridge_protocol.hpp"

namespace rems {

namespace net {
class WsClient;
class WsServer;
}  // namespace net

/// ws://host:port/path?rate=<Hz>
struct BridgeEndpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
  std::string path = "/";
  double rate = 20.0;

  /// Throws ConfigError.
  static BridgeEndpoint parse(std::string_view url);
  std::string url() const;
};

/// Client side of the bridge: a remote device reached over WebSocket.
/// drive is fire-and-forget; sense waits for the matching reply at most
/// max(2 / rate, 0.5 s), then holds the last reading and flags it stale.
class BridgeBackend final : public Backend {
 public:
  explicit BridgeBackend(BridgeEndpoint endpoint);
  ~BridgeBackend() override;

  std::string name() const override { return "bridge:" + endpoint_.url(); }
  void check_compatible(const RobotDefinition& def) const override;
  /// Throws ConnectionLost when the server is unreachable and
  /// SchemaHashMismatch when the handshake is refused.
  void init(const RobotDefinition& def, double t0, const BackendContext& ctx) override;
  void drive(const DefRecord& input, double t) override;
  DefRecord sense() override;
  DefRecord observe_state() override;
  void close() override;
  double device_timestep() const override { return 1.0 / endpoint_.rate; }

  std::chrono::duration<double> timeout() const noexcept;
  bool stale() const;
  bool connected() const;
  /// Frames from the server that failed to decode or broke seq order.
  std::int64_t rejected_frames() const;

 private:
  void on_message(std::string text);
  void on_close(std::string reason);
  void send(BridgeMessage msg);

  BridgeEndpoint endpoint_;
  std::unique_ptr<net::WsClient> client_;
  std::optional<RobotDefinition> def_;
  double dt_ = 0.01;
  double t_last_ = 0.0;
  bool sense_due_ = true;
  std::uint64_t next_seq_ = 1;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  bool connected_ = false;
  bool stale_ = false;
  std::optional<BridgeMessage> hello_reply_;
  std::uint64_t last_server_seq_ = 0;
  std::uint64_t awaiting_ = 0;  // seq of the outstanding sense_request, 0 = none
  std::optional<DefRecord> state_;
  std::optional<DefRecord> reading_;
  std::int64_t rejected_ = 0;
};

struct BridgeServerOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
  /// Accept frames but never reply to drive or sense requests.
  bool silent = false;
  /// Advertise these hashes instead of the definition's own.
  std::optional<SchemaHashes> forced_hashes;
  /// System timestep handed to the inner backend.
  double system_dt = 0.01;
};

/// Serves a definition over the bridge protocol by delegating to an inner
/// backend. Used as a loopback device in tests and demos.
class BridgeServer {
 public:
  BridgeServer(RobotDefinition def, BackendPtr inner, BridgeServerOptions options = {});
  ~BridgeServer();

  std::uint16_t port() const noexcept;
  std::string url(double rate = 20.0) const;
  void set_silent(bool silent) noexcept { silent_ = silent; }
  std::int64_t frames_received() const noexcept { return frames_.load(); }
  void stop();

 private:
  void handle(std::uint64_t session, const std::string& text);

  RobotDefinition def_;
  BackendPtr inner_;
  BridgeServerOptions options_;
  std::atomic<bool> silent_;
  std::atomic<std::int64_t> frames_{0};
  std::unique_ptr<net::WsServer> server_;
};

}  // namespace rems
