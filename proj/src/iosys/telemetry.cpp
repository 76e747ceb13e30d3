#include "rems/iosys/telemetry.hpp"

#include <cmath>
#include <json.hpp>

#include "rems/error.hpp"
#include "rems/net/websocket.hpp"
#include "rems/runtime/clock.hpp"

namespace rems {

namespace {

using Json = nlohmann::ordered_json;

Json triples(const DefRecord& rec) {
  Json a = Json::array();
  for (const auto& e : flatten(rec)) a.push_back(Json::array({e.key, e.value, e.unit}));
  return a;
}

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorKind::malformed_frame, what); }

}  // namespace

std::string encode_telemetry(const StepSnapshot& snapshot) {
  Json j;
  j["protocol"] = kTelemetryProtocol;
  j["t"] = snapshot.t;
  Json robots = Json::array();
  for (const auto& r : snapshot.robots) {
    Json rj;
    rj["id"] = r.id;
    rj["state"] = triples(r.state);
    rj["output"] = triples(r.output);
    rj["stale"] = r.stale;
    robots.push_back(std::move(rj));
  }
  j["robots"] = std::move(robots);
  return j.dump();
}

std::string encode_fleet(const std::vector<RobotInfo>& robots) {
  Json j;
  j["protocol"] = kTelemetryProtocol;
  j["type"] = "fleet";
  Json a = Json::array();
  for (const auto& r : robots) {
    a.push_back({{"id", r.id}, {"definition", r.definition.name()}, {"implementation", r.implementation}});
  }
  j["robots"] = std::move(a);
  return j.dump();
}

TeleopCommand decode_teleop(const std::string& text, std::string source) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    malformed(std::string("teleop frame is not JSON: ") + e.what());
  }
  if (!j.is_object()) malformed("teleop frame must be an object");
  if (!j.contains("type") || j["type"] != "teleop") malformed("expected type \"teleop\"");
  if (!j.contains("keys") || !j["keys"].is_object()) malformed("teleop frame needs a keys object");
  TeleopCommand cmd;
  cmd.source = std::move(source);
  for (const auto& [k, v] : j["keys"].items()) {
    if (!v.is_number()) malformed("teleop key '" + k + "' is not a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) malformed("teleop key '" + k + "' is not finite");
    cmd.keys[k] = x;
  }
  if (j.contains("target")) {
    if (!j["target"].is_string()) malformed("teleop target must be a string");
    cmd.target = j["target"].get<std::string>();
  }
  return cmd;
}

TelemetryServer::TelemetryServer(const std::string& host, std::uint16_t port, std::shared_ptr<TeleopHub> teleop,
                                 std::size_t max_queue)
    : teleop_(std::move(teleop)) {
  net::ServerHandlers h;
  h.on_open = [this](net::SessionId id) {
    std::string fleet;
    {
      std::lock_guard lock(mu_);
      fleet = fleet_frame_;
    }
    if (auto* ws = live_.load(); ws && !fleet.empty()) ws->send(id, std::move(fleet));
  };
  h.on_message = [this](net::SessionId id, std::string text) {
    try {
      if (!teleop_) throw Error(ErrorKind::invalid_argument, "this run takes no teleop input");
      teleop_->submit(decode_teleop(text, "ws:" + std::to_string(id)));
      ++teleop_ok_;
    } catch (const Error& e) {
      ++teleop_bad_;
      Json err{{"protocol", kTelemetryProtocol}, {"type", "error"}, {"reason", e.what()}};
      if (auto* ws = live_.load()) ws->send(id, err.dump());
    }
  };
  ws_ = std::make_unique<net::WsServer>(host, port, kTelemetryPath, std::move(h), max_queue);
  live_.store(ws_.get());
}

TelemetryServer::~TelemetryServer() { stop(); }

std::uint16_t TelemetryServer::port() const noexcept { return ws_->port(); }
std::size_t TelemetryServer::listeners() const { return ws_->session_count(); }

void TelemetryServer::set_fleet(const std::vector<RobotInfo>& robots) {
  std::lock_guard lock(mu_);
  fleet_frame_ = encode_fleet(robots);
}

void TelemetryServer::broadcast(const std::string& text) { ws_->broadcast(text); }

void TelemetryServer::stop() {
  if (ws_) ws_->stop();
}

Broadcaster::Broadcaster(std::shared_ptr<TelemetryServer> server, double rate, double dt)
    : server_(std::move(server)), rate_(rate), dt_(dt) {
  if (!server_) throw Error(ErrorKind::invalid_argument, "broadcaster needs a server");
  if (!(dt > 0) || !(rate > 0) || rate * dt > 1.0 + 1e-9) {
    throw Error(ErrorKind::invalid_argument,
                "broadcast rate must be in (0, 1/dt] = (0, " + format_number(1.0 / dt) + "] Hz");
  }
}

void Broadcaster::setup(const std::vector<RobotInfo>& robots) { server_->set_fleet(robots); }

void Broadcaster::consume(const StepSnapshot& snapshot) {
  if (!device_due(snapshot.k, dt_, rate_)) return;
  ++sent_;
  if (server_->listeners() == 0) return;
  server_->broadcast(encode_telemetry(snapshot));
}

}  // namespace rems
