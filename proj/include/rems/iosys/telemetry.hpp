#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "rems/iosys/teleop.hpp"
#include "rems/runtime/systems.hpp"

namespace rems {

namespace net {
class WsServer;
}

inline constexpr const char* kTelemetryProtocol = "rems-telemetry/1";
inline constexpr const char* kTelemetryPath = "/ws";

/// {"protocol":"rems-telemetry/1","t":..,"robots":[{"id","state":[[k,v,u]],"output":[..],"stale"}]}
std::string encode_telemetry(const StepSnapshot& snapshot);
/// Sent once to each listener on connect:
/// {"protocol":"rems-telemetry/1","type":"fleet","robots":[{"id","definition","implementation"}]}
std::string encode_fleet(const std::vector<RobotInfo>& robots);
/// {"type":"teleop","keys":{"fwd":..,"turn":..},"target":"all"|id}; target
/// defaults to "all". Throws MalformedFrame.
TeleopCommand decode_teleop(const std::string& text, std::string source = "ws");

/// The /ws endpoint: telemetry out, teleop in.
class TelemetryServer {
 public:
  /// Port 0 picks a free port. `teleop` may be null (incoming teleop is then
  /// refused). Throws IoError when the address cannot be bound.
  TelemetryServer(const std::string& host, std::uint16_t port, std::shared_ptr<TeleopHub> teleop,
                  std::size_t max_queue = 100);
  ~TelemetryServer();
  TelemetryServer(const TelemetryServer&) = delete;
  TelemetryServer& operator=(const TelemetryServer&) = delete;

  std::uint16_t port() const noexcept;
  std::size_t listeners() const;
  void set_fleet(const std::vector<RobotInfo>& robots);
  void broadcast(const std::string& text);
  void stop();

  std::uint64_t teleop_accepted() const noexcept { return teleop_ok_.load(); }
  std::uint64_t teleop_rejected() const noexcept { return teleop_bad_.load(); }

 private:
  std::unique_ptr<net::WsServer> ws_;
  std::atomic<net::WsServer*> live_{nullptr};  // handlers may fire before ws_ is assigned
  std::shared_ptr<TeleopHub> teleop_;
  mutable std::mutex mu_;
  std::string fleet_frame_;
  std::atomic<std::uint64_t> teleop_ok_{0};
  std::atomic<std::uint64_t> teleop_bad_{0};
};

/// Output system that broadcasts every step whose index is a tick of `rate`.
class Broadcaster final : public OutputSystem {
 public:
  /// Throws InvalidArgument unless 0 < rate <= 1/dt.
  Broadcaster(std::shared_ptr<TelemetryServer> server, double rate, double dt);

  std::string name() const override { return "broadcast"; }
  void setup(const std::vector<RobotInfo>& robots) override;
  void consume(const StepSnapshot& snapshot) override;

  std::uint64_t frames_sent() const noexcept { return sent_; }

 private:
  std::shared_ptr<TelemetryServer> server_;
  double rate_;
  double dt_;
  std::uint64_t sent_ = 0;
};

}  // namespace rems
