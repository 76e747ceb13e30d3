#include "rems/backends/bridge.hpp"

#include <charconv>
#include <cmath>

#include "rems/net/websocket.hpp"
#include "rems/runtime/clock.hpp"

namespace rems {

BridgeEndpoint BridgeEndpoint::parse(std::string_view url) {
  auto bad = [&](const std::string& why) {
    throw Error(ErrorKind::config_error, "bad bridge url '" + std::string(url) + "': " + why);
  };
  constexpr std::string_view scheme = "ws://";
  if (url.substr(0, scheme.size()) != scheme) bad("expected ws://host:port/path");
  std::string_view rest = url.substr(scheme.size());
  BridgeEndpoint ep;
  const auto slash = rest.find_first_of("/?");
  const std::string_view authority = rest.substr(0, slash);
  rest = slash == std::string_view::npos ? std::string_view{} : rest.substr(slash);
  const auto colon = authority.rfind(':');
  if (colon == std::string_view::npos || colon == 0) bad("missing host:port");
  ep.host = std::string(authority.substr(0, colon));
  const auto port_text = authority.substr(colon + 1);
  unsigned port = 0;
  auto [p, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc{} || p != port_text.data() + port_text.size() || port == 0 || port > 65535) bad("bad port");
  ep.port = static_cast<std::uint16_t>(port);

  const auto q = rest.find('?');
  ep.path = q == 0 ? "/" : std::string(rest.substr(0, q));
  if (ep.path.empty()) ep.path = "/";
  if (q != std::string_view::npos) {
    std::string_view query = rest.substr(q + 1);
    while (!query.empty()) {
      const auto amp = query.find('&');
      const auto item = query.substr(0, amp);
      query = amp == std::string_view::npos ? std::string_view{} : query.substr(amp + 1);
      if (item.substr(0, 5) == "rate=") {
        const auto v = item.substr(5);
        auto [end, err] = std::from_chars(v.data(), v.data() + v.size(), ep.rate);
        if (err != std::errc{} || end != v.data() + v.size() || !(ep.rate > 0) || !std::isfinite(ep.rate)) {
          bad("rate must be a positive number");
        }
      } else {
        bad("unknown query parameter '" + std::string(item) + "'");
      }
    }
  }
  return ep;
}

std::string BridgeEndpoint::url() const {
  return "ws://" + host + ":" + std::to_string(port) + path + "?rate=" + format_number(rate);
}

// ---------------------------------------------------------------- client

BridgeBackend::BridgeBackend(BridgeEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

BridgeBackend::~BridgeBackend() { close(); }

void BridgeBackend::check_compatible(const RobotDefinition& def) const {
  if (def.empty()) throw Error(ErrorKind::schema_incompatible, "bridge backend needs a non-empty definition");
}

std::chrono::duration<double> BridgeBackend::timeout() const noexcept {
  return std::chrono::duration<double>(std::max(2.0 / endpoint_.rate, 0.5));
}

void BridgeBackend::send(BridgeMessage msg) {
  msg.seq = next_seq_++;
  client_->send(bridge_encode(msg));
}

void BridgeBackend::init(const RobotDefinition& def, double t0, const BackendContext& ctx) {
  check_compatible(def);
  close();
  def_ = def;
  dt_ = ctx.system_dt;
  t_last_ = t0;
  sense_due_ = true;
  next_seq_ = 1;
  {
    std::lock_guard lock(mu_);
    connected_ = false;
    stale_ = true;
    hello_reply_.reset();
    last_server_seq_ = 0;
    awaiting_ = 0;
    state_ = def.state_record(def.initial_part_states()).with_timestamp(t0);
    reading_ = def.sense_map(*state_).with_timestamp(t0);
  }

  client_ = std::make_unique<net::WsClient>(net::ClientHandlers{
      [this](std::string text) { on_message(std::move(text)); },
      [this](std::string reason) { on_close(std::move(reason)); },
  });
  const auto wait = std::chrono::duration_cast<std::chrono::milliseconds>(timeout());
  client_->connect(endpoint_.host, endpoint_.port, endpoint_.path, std::max(wait, std::chrono::milliseconds(1000)));
  {
    std::lock_guard lock(mu_);
    connected_ = true;
  }

  BridgeMessage hello;
  hello.type = BridgeType::hello;
  hello.t = t0;
  hello.protocol = std::string(kBridgeProtocol);
  hello.definition = def.name();
  hello.schema_hash = schema_hashes(def);
  const auto hello_seq = next_seq_;
  send(hello);

  std::unique_lock lock(mu_);
  cv_.wait_for(lock, timeout(), [&] { return hello_reply_.has_value() || !connected_; });
  if (!hello_reply_) {
    throw Error(ErrorKind::connection_lost, "no handshake reply from " + endpoint_.url());
  }
  const auto reply = *hello_reply_;
  if (reply.type == BridgeType::bye) {
    throw Error(ErrorKind::schema_hash_mismatch,
                "bridge refused the handshake: " + reply.reason.value_or("no reason given"));
  }
  if (reply.seq != hello_seq || reply.protocol != std::string(kBridgeProtocol)) {
    throw Error(ErrorKind::malformed_frame, "unexpected handshake reply from " + endpoint_.url());
  }
  if (reply.schema_hash != schema_hashes(def)) {
    lock.unlock();
    close();
    throw Error(ErrorKind::schema_hash_mismatch, "remote '" + reply.definition.value_or("?") +
                                                     "' serves different schemas than '" + def.name() + "'");
  }
  stale_ = false;
}

void BridgeBackend::on_message(std::string text) {
  BridgeMessage msg;
  try {
    msg = bridge_decode(text);
  } catch (const Error&) {
    std::lock_guard lock(mu_);
    ++rejected_;
    return;
  }
  std::lock_guard lock(mu_);
  if (msg.seq <= last_server_seq_ && msg.type != BridgeType::bye) {
    ++rejected_;
    return;
  }
  last_server_seq_ = std::max(last_server_seq_, msg.seq);
  try {
    switch (msg.type) {
      case BridgeType::hello:
        hello_reply_ = std::move(msg);
        break;
      case BridgeType::bye:
        if (!hello_reply_) hello_reply_ = msg;
        connected_ = false;
        stale_ = true;
        break;
      case BridgeType::observe_reply:
        state_ = unflatten(def_->state_schema(), msg.data).with_timestamp(msg.t);
        break;
      case BridgeType::sense_reply:
        reading_ = unflatten(def_->output_schema(), msg.data).with_timestamp(msg.t);
        if (msg.seq == awaiting_) {
          awaiting_ = 0;
          stale_ = false;
        }
        break;
      default:
        ++rejected_;
    }
  } catch (const Error&) {
    ++rejected_;
  }
  cv_.notify_all();
}

void BridgeBackend::on_close(std::string) {
  std::lock_guard lock(mu_);
  connected_ = false;
  stale_ = true;
  cv_.notify_all();
}

void BridgeBackend::drive(const DefRecord& input, double t) {
  if (!def_) throw Error(ErrorKind::not_initialized, "bridge backend is not initialized");
  if (input.schema() != def_->input_schema()) {
    throw Error(ErrorKind::schema_mismatch, "drive input does not match the definition's input schema");
  }
  t_last_ = t;
  const auto k = static_cast<std::int64_t>(std::llround(t / dt_));
  if (!device_due(k, dt_, endpoint_.rate)) return;
  sense_due_ = true;
  if (!connected()) return;
  BridgeMessage msg;
  msg.type = BridgeType::drive;
  msg.t = t;
  msg.data = flatten(input);
  send(std::move(msg));
}

DefRecord BridgeBackend::sense() {
  if (!def_) throw Error(ErrorKind::not_initialized, "bridge backend is not initialized");
  std::unique_lock lock(mu_);
  if (sense_due_ && connected_ && awaiting_ == 0) {
    sense_due_ = false;
    BridgeMessage msg;
    msg.type = BridgeType::sense_request;
    msg.t = t_last_;
    awaiting_ = next_seq_;
    lock.unlock();
    send(std::move(msg));
    lock.lock();
    if (!cv_.wait_for(lock, timeout(), [&] { return awaiting_ == 0 || !connected_; })) stale_ = true;
  } else if (awaiting_ != 0 || !connected_) {
    // A request is still outstanding or the link is gone: hold, never block.
    stale_ = true;
  }
  return reading_->with_stale(stale_);
}

DefRecord BridgeBackend::observe_state() {
  if (!def_) throw Error(ErrorKind::not_initialized, "bridge backend is not initialized");
  std::lock_guard lock(mu_);
  return state_->with_stale(stale_);
}

void BridgeBackend::close() {
  if (client_) {
    if (client_->is_open()) {
      BridgeMessage bye;
      bye.type = BridgeType::bye;
      bye.t = t_last_;
      send(std::move(bye));
    }
    client_->close();
    client_.reset();
  }
  std::lock_guard lock(mu_);
  connected_ = false;
}

bool BridgeBackend::stale() const {
  std::lock_guard lock(mu_);
  return stale_;
}

bool BridgeBackend::connected() const {
  std::lock_guard lock(mu_);
  return connected_;
}

std::int64_t BridgeBackend::rejected_frames() const {
  std::lock_guard lock(mu_);
  return rejected_;
}

// ---------------------------------------------------------------- server

BridgeServer::BridgeServer(RobotDefinition def, BackendPtr inner, BridgeServerOptions options)
    : def_(std::move(def)), inner_(std::move(inner)), options_(std::move(options)), silent_(options_.silent) {
  inner_->check_compatible(def_);
  server_ = std::make_unique<net::WsServer>(
      options_.host, options_.port, "/",
      net::ServerHandlers{nullptr, [this](net::SessionId id, std::string text) { handle(id, text); }, nullptr});
}

BridgeServer::~BridgeServer() { stop(); }

std::uint16_t BridgeServer::port() const noexcept { return server_->port(); }

std::string BridgeServer::url(double rate) const {
  BridgeEndpoint ep;
  ep.host = options_.host;
  ep.port = port();
  ep.rate = rate;
  return ep.url();
}

void BridgeServer::stop() {
  if (server_) server_->stop();
}

void BridgeServer::handle(std::uint64_t session, const std::string& text) {
  ++frames_;
  BridgeMessage req;
  try {
    req = bridge_decode(text);
  } catch (const Error& e) {
    BridgeMessage bye{BridgeType::bye, 0.0, 0, {}, {}, {}, {}, std::string(e.what())};
    server_->send(session, bridge_encode(bye));
    server_->close(session);
    return;
  }

  BridgeMessage reply;
  reply.seq = req.seq;
  reply.t = req.t;
  const SchemaHashes ours = options_.forced_hashes.value_or(schema_hashes(def_));
  try {
    switch (req.type) {
      case BridgeType::hello: {
        if (req.protocol != std::string(kBridgeProtocol) || req.schema_hash != ours) {
          reply.type = BridgeType::bye;
          reply.reason = req.protocol != std::string(kBridgeProtocol) ? "unsupported protocol"
                                                                       : "schema hash mismatch";
          server_->send(session, bridge_encode(reply));
          server_->close(session);
          return;
        }
        inner_->init(def_, req.t, BackendContext{"bridge", 0, options_.system_dt});
        reply.type = BridgeType::hello;
        reply.protocol = std::string(kBridgeProtocol);
        reply.definition = def_.name();
        reply.schema_hash = ours;
        break;
      }
      case BridgeType::drive:
        inner_->drive(unflatten(def_.input_schema(), req.data), req.t);
        if (silent_) return;
        reply.type = BridgeType::observe_reply;
        reply.data = flatten(inner_->observe_state());
        break;
      case BridgeType::sense_request:
        if (silent_) return;
        reply.type = BridgeType::sense_reply;
        reply.data = flatten(inner_->sense());
        break;
      case BridgeType::bye:
        server_->close(session);
        return;
      default:
        return;
    }
  } catch (const Error& e) {
    reply = BridgeMessage{BridgeType::bye, req.t, req.seq, {}, {}, {}, {}, std::string(e.what())};
    server_->send(session, bridge_encode(reply));
    server_->close(session);
    return;
  }
  server_->send(session, bridge_encode(reply));
}

}  // namespace rems
