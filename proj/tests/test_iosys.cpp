#include <doctest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <fstream>
#include <json.hpp>
#include <random>
#include <sstream>
#include <thread>

#include "rems/backends/analytical.hpp"
#include "rems/backends/emulated.hpp"
#include "rems/iosys/log_writer.hpp"
#include "rems/iosys/telemetry.hpp"
#include "rems/iosys/teleop.hpp"
#include "rems/iosys/trajectory.hpp"
#include "rems/net/websocket.hpp"
#include "rems/robotdefs/builtins.hpp"
#include "rems/runtime/clock.hpp"
#include "rems/runtime/runtime.hpp"
#include "test_util.hpp"

using namespace rems;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("rems_iosys_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

BackendFactory analytical() {
  return [] { return std::make_unique<AnalyticalBackend>(); };
}

BackendFactory emulated(const char* profile) {
  return [profile] { return std::make_unique<EmulatedBackend>(builtin_profile(profile)); };
}

/// Piecewise wheel commands, 0.5 s apart.
std::string wheel_csv(unsigned seed, int segments) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-10, 10);
  std::string s = "t,wh.l[rad/s],wh.r[rad/s]\n";
  for (int i = 0; i < segments; ++i) {
    s += format_number(0.5 * i) + "," + format_number(u(rng)) + "," + format_number(u(rng)) + "\n";
  }
  return s;
}

/// Sends a teleop command at chosen steps; stands in for a live client.
class ScriptedTeleop final : public ProcessSystem {
 public:
  ScriptedTeleop(std::shared_ptr<TeleopHub> hub, std::map<std::int64_t, TeleopCommand> script)
      : hub_(std::move(hub)), script_(std::move(script)) {}
  std::vector<InputOverride> process(const StepSnapshot& s, JobPool&) override {
    if (auto it = script_.find(s.k); it != script_.end()) hub_->submit(it->second);
    return {};
  }

 private:
  std::shared_ptr<TeleopHub> hub_;
  std::map<std::int64_t, TeleopCommand> script_;
};

}  // namespace

TEST_CASE("trajectory sampling holds") {
  const auto traj = parse_trajectory("t,v[m/s]\n0,1\n5,0\n");
  CHECK(sample(traj, 2.5)["v"] == 1.0);
  CHECK(sample(traj, 0)["v"] == 1.0);
  CHECK(sample(traj, 5)["v"] == 0.0);
  CHECK(sample(traj, 999)["v"] == 0.0);
  CHECK_THROWS_KIND(sample(traj, -0.01), ErrorKind::invalid_argument);

  const auto late = parse_trajectory("t,a[rad/s],b[m]\n1,3,4\n");
  CHECK(sample(late, 0.5)["a"] == 0.0);
  CHECK(sample(late, 0.5)["b"] == 0.0);
  CHECK(sample(late, 1.0)["b"] == 4.0);

  // Piecewise constant and right-continuous.
  const auto traj2 = parse_trajectory(wheel_csv(3, 20));
  std::mt19937 rng(9);
  for (int i = 0; i < 2000; ++i) {
    const int seg = static_cast<int>(rng() % 19);
    const double a = 0.5 * seg + std::uniform_real_distribution<double>(0, 0.4999)(rng);
    const double b = 0.5 * seg + std::uniform_real_distribution<double>(0, 0.4999)(rng);
    CHECK(sample(traj2, a) == sample(traj2, b).with_timestamp(a));
    CHECK(sample(traj2, 0.5 * seg)["wh.l"] == traj2.rows[static_cast<std::size_t>(seg)][0]);
  }
}

TEST_CASE("trajectory parse errors name the line") {
  auto expect = [](const std::string& csv, ErrorKind kind, const std::string& where) {
    try {
      parse_trajectory(csv, "traj.csv");
      FAIL("expected an error for: " << csv);
    } catch (const Error& e) {
      CHECK(e.kind() == kind);
      CHECK_MESSAGE(std::string(e.what()).find(where) != std::string::npos, e.what());
    }
  };
  expect("t,v[m/s]\n0,1\n1,x\n", ErrorKind::parse_error, "traj.csv:3:");
  expect("t,v[m/s]\n0,1\n1,2,3\n", ErrorKind::parse_error, "traj.csv:3:");
  expect("t,v[furlong]\n0,1\n", ErrorKind::parse_error, "traj.csv:1:");
  expect("time,v[m/s]\n0,1\n", ErrorKind::parse_error, "traj.csv:1:");
  expect("t,v\n0,1\n", ErrorKind::parse_error, "traj.csv:1:");
  expect("t,v[m/s],v[m/s]\n", ErrorKind::parse_error, "duplicate");
  expect("", ErrorKind::parse_error, "empty");
  expect("t,v[m/s]\n0,1\n1,1\n1,2\n", ErrorKind::non_monotone_time, "traj.csv:4:");
  expect("t,v[m/s]\n2,1\n1,1\n", ErrorKind::non_monotone_time, "traj.csv:3:");
  expect("t,v[m/s],stale\n0,1,2\n", ErrorKind::parse_error, "stale");
  CHECK_THROWS_KIND(load_trajectory("/nonexistent/traj.csv"), ErrorKind::io_error);

  // A log file parses as a trajectory; the stale column is ignored.
  const auto t = parse_trajectory("t,wh.l[rad/s],wh.r[rad/s],stale\r\n0.01,1,2,0\r\n0.02,3,4,1\r\n\r\n");
  CHECK(t.size() == 2);
  CHECK(sample(t, 0.02)["wh.r"] == 4.0);
}

TEST_CASE("trajectory must fit the robot") {
  const auto wb = builtin_definition("woodbot");
  CHECK_NOTHROW(check_trajectory(parse_trajectory("t,wh.l[rpm]\n0,1\n"), wb));
  CHECK_THROWS_KIND(check_trajectory(parse_trajectory("t,wh.x[rad/s]\n0,1\n"), wb), ErrorKind::schema_mismatch);
  CHECK_THROWS_KIND(check_trajectory(parse_trajectory("t,wh.l[m]\n0,1\n"), wb), ErrorKind::schema_mismatch);

  // Unit conversion happens on the way in.
  Runtime rt({.dt = 0.01, .duration = 0.02});
  struct Grab final : OutputSystem {
    std::string name() const override { return "grab"; }
    void consume(const StepSnapshot& s) override { last = s.robots[0].input; }
    DefRecord last;
  };
  auto grab = std::make_shared<Grab>();
  rt.add_robot({"a", wb, analytical(), std::make_shared<TrajectoryInput>(parse_trajectory("t,wh.l[rpm]\n0,60\n")),
                {grab}});
  rt.run();
  CHECK(grab->last["wh.l"] == doctest::Approx(2 * 3.141592653589793));
  CHECK(grab->last["wh.r"] == 0.0);
}

TEST_CASE("teleop_to_input") {
  const auto wb = builtin_definition("woodbot");
  const std::vector<MappingRule> spread{MappingRule::linear({"fwd"}, {"wh.l", "wh.r"}, 10.0)};
  auto in = teleop_to_input({"kb", 0, {{"fwd", 1.0}}}, spread, wb.input_schema());
  CHECK(in["wh.l"] == 10.0);
  CHECK(in["wh.r"] == 10.0);
  const std::vector<MappingRule> spin{MappingRule::linear({"turn"}, {"wh.l"}, -10.0),
                                      MappingRule::linear({"turn"}, {"wh.r"}, 10.0)};
  in = teleop_to_input({"kb", 0, {{"turn", 1.0}}}, spin, wb.input_schema());
  CHECK(in["wh.l"] == -10.0);
  CHECK(in["wh.r"] == 10.0);
  CHECK_THROWS_KIND(teleop_to_input({"kb", 0, {{"jump", 1.0}}}, spread, wb.input_schema()), ErrorKind::unknown_key);
  CHECK_THROWS_KIND(teleop_to_input({"kb", 0, {{"fwd", 1.5}}}, spread, wb.input_schema()),
                    ErrorKind::range_violation);
  // Stateless: the same command gives the same record.
  CHECK(teleop_to_input({"kb", 0, {{"fwd", 0.3}}}, spread, wb.input_schema()) ==
        teleop_to_input({"other", 7, {{"fwd", 0.3}}}, spread, wb.input_schema()));
}

TEST_CASE("teleop hub: latest wins, targets") {
  TeleopHub hub;
  const auto wb = builtin_definition("woodbot");
  const RobotInfo a{"a", wb, "analytical"}, b{"b", wb, "analytical"}, c{"c", builtin_definition("omnibase"), ""};
  hub.setup({a});
  hub.setup({b, c});
  CHECK_FALSE(hub.sample(0.01, a).has_value());
  hub.submit({"x", 0, {{"fwd", 0.5}}});
  hub.submit({"y", 0, {{"fwd", 1.0}}});
  CHECK(hub.sample(0.01, a)->operator[]("wh.l") == doctest::Approx(12.0));
  CHECK(hub.sample(0.01, c)->operator[]("wh.fl") == doctest::Approx(16.0));
  hub.submit({"x", 0, {{"turn", 1.0}}, "b"});
  CHECK(hub.sample(0.02, a)->operator[]("wh.l") == doctest::Approx(12.0));
  CHECK(hub.sample(0.02, b)->operator[]("wh.l") == doctest::Approx(-12.0));
  CHECK(hub.sample(0.02, b)->timestamp() == 0.02);
  CHECK_THROWS_KIND(hub.submit({"x", 0, {{"fwd", 0.1}}, "nobody"}), ErrorKind::invalid_argument);
  CHECK_THROWS_KIND(hub.submit({"x", 0, {{"jump", 1}}}), ErrorKind::unknown_key);
  CHECK_THROWS_KIND(hub.submit({"x", 0, {{"fwd", -2}}}), ErrorKind::range_violation);
  CHECK(hub.accepted() == 3);
  // Release: explicit zero stops the robot.
  hub.submit({"y", 0, {}});
  CHECK(hub.sample(0.03, a)->operator[]("wh.l") == 0.0);
}

TEST_CASE("log writer files and rows") {
  const auto dir = scratch("logs");
  const auto wb = builtin_definition("woodbot");
  auto log = std::make_shared<LogWriter>(dir);
  Runtime rt({.dt = 0.01, .duration = 10.0});
  const auto traj = std::make_shared<TrajectoryInput>(parse_trajectory(wheel_csv(1, 20)));
  rt.add_robot({"one", wb, analytical(), traj, {log}});
  rt.add_robot({"two", wb, analytical(), traj, {log}});
  const auto report = rt.run();
  CHECK(report.output_errors.empty());
  CHECK(report.files.size() == 6);
  CHECK(log_header(wb.state_schema()) == "t,x[m],y[m],theta[rad],stale\n");
  for (const char* id : {"one", "two"}) {
    for (const char* space : {"input", "state", "output"}) {
      const auto path = LogWriter::file_for(dir, id, space);
      REQUIRE(fs::exists(path));
      const auto lines = lines_of(slurp(path));
      REQUIRE(lines.size() == 1001);
      for (std::int64_t k = 1; k <= 1000; ++k) {
        const auto& row = lines[static_cast<std::size_t>(k)];
        CHECK(row.substr(0, row.find(',')) == format_number(step_time(k, 0.01)));
        CHECK(row.back() == '0');
      }
    }
  }
  CHECK(lines_of(slurp(LogWriter::file_for(dir, "one", "state")))[0] == "t,x[m],y[m],theta[rad],stale");
  CHECK(slurp(LogWriter::file_for(dir, "one", "state")) == slurp(LogWriter::file_for(dir, "two", "state")));
  fs::remove_all(dir);
}

TEST_CASE("log writer I/O failure disables only itself") {
  const auto dir = scratch("blocked");
  fs::create_directories(dir.parent_path());
  { std::ofstream(dir) << "a file where the directory should be"; }
  auto bad = std::make_shared<LogWriter>(dir / "sub");
  const auto good_dir = scratch("good");
  auto good = std::make_shared<LogWriter>(good_dir);
  Runtime rt({.dt = 0.01, .duration = 0.5});
  rt.add_robot({"a", builtin_definition("woodbot"), analytical(), nullptr, {bad, good}});
  const auto report = rt.run();
  CHECK(report.steps == 50);
  REQUIRE(report.output_errors.size() == 1);
  CHECK(report.output_errors[0].find("log:") == 0);
  CHECK(lines_of(slurp(LogWriter::file_for(good_dir, "a", "state"))).size() == 51);
  fs::remove_all(dir);
  fs::remove_all(good_dir);
}

TEST_CASE("replaying an input log reproduces the state log") {
  const auto wb = builtin_definition("woodbot");
  const auto first = scratch("replay_a");
  const auto second = scratch("replay_b");
  {
    auto hub = std::make_shared<TeleopHub>();
    Runtime rt({.dt = 0.01, .duration = 5.0, .seed = 11});
    rt.add_process(std::make_shared<ScriptedTeleop>(
        hub, std::map<std::int64_t, TeleopCommand>{{3, {"kb", 0, {{"fwd", 1}}}},
                                                   {70, {"kb", 0, {{"fwd", 0.4}, {"turn", -0.7}}}},
                                                   {211, {"kb", 0, {{"turn", 1}}}},
                                                   {350, {"kb", 0, {}}}}));
    rt.add_robot({"wb", wb, emulated("dynabot"), hub, {std::make_shared<LogWriter>(first)}});
    rt.run();
  }
  {
    Runtime rt({.dt = 0.01, .duration = 5.0, .seed = 11});
    auto replay = std::make_shared<TrajectoryInput>(load_trajectory(LogWriter::file_for(first, "wb", "input")));
    rt.add_robot({"wb", wb, emulated("dynabot"), replay, {std::make_shared<LogWriter>(second)}});
    rt.run();
  }
  for (const char* space : {"input", "state", "output"}) {
    const auto a = slurp(LogWriter::file_for(first, "wb", space));
    CHECK(a.size() > 1000);
    CHECK(a == slurp(LogWriter::file_for(second, "wb", space)));
  }
  // The run actually moved.
  const auto last = lines_of(slurp(LogWriter::file_for(first, "wb", "state"))).back();
  CHECK(last.substr(last.find(',') + 1, 2) != "0,");
  fs::remove_all(first);
  fs::remove_all(second);
}

TEST_CASE("seeded runs write identical logs") {
  const auto wb = builtin_definition("woodbot");
  auto run = [&](const fs::path& dir, std::uint64_t seed) {
    Runtime rt({.dt = 0.01, .duration = 3.0, .seed = seed});
    rt.add_system_input(std::make_shared<TrajectoryInput>(parse_trajectory(wheel_csv(5, 6))));
    auto log = std::make_shared<LogWriter>(dir);
    auto noisy = builtin_profile("create2");
    noisy.noise_std = 5.0;  // mm
    rt.add_robot({"noisy", wb, [noisy] { return std::make_unique<EmulatedBackend>(noisy); }, nullptr, {log}});
    rt.add_robot({"quiet", wb, analytical(), nullptr, {log}});
    rt.run();
  };
  const auto a = scratch("seed_a"), b = scratch("seed_b"), c = scratch("seed_c");
  run(a, 42);
  run(b, 42);
  run(c, 43);
  for (const char* id : {"noisy", "quiet"}) {
    for (const char* space : {"input", "state", "output"}) {
      CHECK(slurp(LogWriter::file_for(a, id, space)) == slurp(LogWriter::file_for(b, id, space)));
    }
  }
  // The seed reaches the sensor noise.
  CHECK(slurp(LogWriter::file_for(a, "noisy", "output")) != slurp(LogWriter::file_for(c, "noisy", "output")));
  fs::remove_all(a);
  fs::remove_all(b);
  fs::remove_all(c);
}

TEST_CASE("telemetry frame encoding") {
  const auto wb = builtin_definition("woodbot");
  StepSnapshot s{7, 0.07, {}};
  s.robots.push_back(RobotSnapshot{"wb", make_record(wb.input_schema()),
                                   make_record(wb.state_schema(), {{"x", 1.5}}),
                                   make_record(Schema("o", {{"range.front", "m"}}), {{"range.front", 0.25}}), true});
  CHECK(encode_telemetry(s) ==
        R"({"protocol":"rems-telemetry/1","t":0.07,"robots":[{"id":"wb","state":[["x",1.5,"m"],["y",0.0,"m"],)"
        R"(["theta",0.0,"rad"]],"output":[["range.front",0.25,"m"]],"stale":true}]})");
  CHECK(encode_fleet({{"wb", wb, "analytical"}}) ==
        R"({"protocol":"rems-telemetry/1","type":"fleet","robots":[{"id":"wb","definition":"woodbot",)"
        R"("implementation":"analytical"}]})");

  auto cmd = decode_teleop(R"({"type":"teleop","keys":{"fwd":1,"turn":-0.5},"target":"wb"})");
  CHECK(cmd.keys.at("fwd") == 1.0);
  CHECK(cmd.keys.at("turn") == -0.5);
  CHECK(cmd.target == "wb");
  CHECK(decode_teleop(R"({"type":"teleop","keys":{}})").target == "all");
  for (const char* bad : {"nope", "[]", R"({"type":"drive","keys":{}})", R"({"type":"teleop"})",
                          R"({"type":"teleop","keys":{"fwd":"x"}})", R"({"type":"teleop","keys":{},"target":3})"}) {
    CHECK_THROWS_KIND(decode_teleop(bad), ErrorKind::malformed_frame);
  }
}

TEST_CASE("broadcaster decimates to its rate") {
  auto server = std::make_shared<TelemetryServer>("127.0.0.1", 0, nullptr);
  CHECK_THROWS_KIND(Broadcaster(server, 200, 0.01), ErrorKind::invalid_argument);
  CHECK_THROWS_KIND(Broadcaster(server, 0, 0.01), ErrorKind::invalid_argument);
  Broadcaster b(server, 20, 0.001);
  int sent_at_50 = 0;
  for (std::int64_t k = 1; k <= 1000; ++k) {
    const auto before = b.frames_sent();
    b.consume(StepSnapshot{k, step_time(k, 0.001), {}});
    if (b.frames_sent() != before) {
      CHECK(k % 50 == 0);
      ++sent_at_50;
    }
  }
  CHECK(sent_at_50 == 20);  // also a no-op with zero listeners
}

TEST_CASE("live /ws endpoint: telemetry out, teleop in") {
  auto hub = std::make_shared<TeleopHub>();
  auto server = std::make_shared<TelemetryServer>("127.0.0.1", 0, hub);
  std::mutex mu;
  std::vector<nlohmann::json> frames;
  net::WsClient client({[&](std::string text) {
                          std::lock_guard lock(mu);
                          frames.push_back(nlohmann::json::parse(text));
                        },
                        {}});

  const auto wb = builtin_definition("woodbot");
  struct Gate final : ProcessSystem {
    // Holds the run at step 1 until the client is connected, then sends one
    // teleop frame over the socket at step 10.
    Gate(TelemetryServer& s, net::WsClient& c) : server(s), client(c) {}
    std::vector<InputOverride> process(const StepSnapshot& snap, JobPool&) override {
      if (snap.k == 1) {
        client.connect("127.0.0.1", server.port(), "/ws", std::chrono::milliseconds(2000));
      }
      if (snap.k == 10) {
        client.send(R"({"type":"teleop","keys":{"fwd":1},"target":"all"})");
        client.send(R"({"type":"teleop","keys":{"fly":1}})");
        const auto until = std::chrono::steady_clock::now() + std::chrono::seconds(2);
        while (server.teleop_accepted() < 1 && std::chrono::steady_clock::now() < until) {
          std::this_thread::sleep_for(std::chrono::milliseconds(1));
        }
      }
      return {};
    }
    TelemetryServer& server;
    net::WsClient& client;
  };
  Runtime rt({.dt = 0.01, .duration = 1.0});
  rt.add_process(std::make_shared<Gate>(*server, client));
  auto bc = std::make_shared<Broadcaster>(server, 20, 0.01);
  for (const char* id : {"r1", "r2", "r3"}) rt.add_robot({id, wb, analytical(), hub, {bc}});
  rt.run();

  const auto until = std::chrono::steady_clock::now() + std::chrono::seconds(2);
  for (;;) {
    {
      std::lock_guard lock(mu);
      if (frames.size() >= 21 && server->teleop_rejected() >= 1) break;
    }
    REQUIRE(std::chrono::steady_clock::now() < until);
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  std::lock_guard lock(mu);
  REQUIRE(frames[0]["type"] == "fleet");
  CHECK(frames[0]["robots"].size() == 3);
  std::vector<double> ts;
  bool saw_error = false;
  for (const auto& f : frames) {
    CHECK(f["protocol"] == kTelemetryProtocol);
    if (f.contains("type")) {
      saw_error |= f["type"] == "error";
      continue;
    }
    ts.push_back(f["t"].get<double>());
    CHECK(f["robots"].size() == 3);
  }
  CHECK(saw_error);
  REQUIRE(ts.size() == 20);
  for (std::size_t i = 0; i < ts.size(); ++i) CHECK(ts[i] == step_time(5 * static_cast<std::int64_t>(i + 1), 0.01));
  // Teleop reached all three robots: they moved forward by the end.
  const auto& last = frames.back().contains("type") ? frames[frames.size() - 2] : frames.back();
  for (const auto& r : last["robots"]) CHECK(r["state"][0][1].get<double>() > 0.1);
  client.close();
}

TEST_CASE("a stalled listener is dropped without slowing broadcasts") {
  auto server = std::make_shared<TelemetryServer>("127.0.0.1", 0, nullptr, 100);

  // Raw listener that completes the handshake and then never reads.
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  REQUIRE(fd >= 0);
  int small = 4096;
  ::setsockopt(fd, SOL_SOCKET, SO_RCVBUF, &small, sizeof small);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(server->port());
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  REQUIRE(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
  const std::string upgrade =
      "GET /ws HTTP/1.1\r\nHost: 127.0.0.1\r\nUpgrade: websocket\r\nConnection: Upgrade\r\n"
      "Sec-WebSocket-Key: dGhlIHNhbXBsZSBub25jZQ==\r\nSec-WebSocket-Version: 13\r\n\r\n";
  REQUIRE(::send(fd, upgrade.data(), upgrade.size(), 0) == static_cast<ssize_t>(upgrade.size()));
  char buf[1024];
  REQUIRE(::recv(fd, buf, sizeof buf, 0) > 0);

  std::atomic<int> received{0};
  net::WsClient healthy({[&](std::string) { ++received; }, {}});
  healthy.connect("127.0.0.1", server->port(), "/ws", std::chrono::milliseconds(2000));
  const auto wait_for = [&](auto pred) {
    const auto until = std::chrono::steady_clock::now() + std::chrono::seconds(5);
    while (!pred() && std::chrono::steady_clock::now() < until) std::this_thread::sleep_for(std::chrono::milliseconds(2));
    return pred();
  };
  REQUIRE(wait_for([&] { return server->listeners() == 2; }));

  const std::string frame(64 * 1024, 'x');
  std::vector<double> calls;
  const int n = 400;
  for (int i = 0; i < n; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    server->broadcast(frame);
    calls.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  std::sort(calls.begin(), calls.end());
  CHECK(wait_for([&] { return server->listeners() == 1; }));
  CHECK(wait_for([&] { return received.load() == n; }));
  // broadcast only posts to the I/O thread; p99 rather than max so a
  // preempted caller on a loaded single core does not count.
  CHECK(calls[calls.size() * 99 / 100] < 1e-3);
  ::close(fd);
  healthy.close();
}
