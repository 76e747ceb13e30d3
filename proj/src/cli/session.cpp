#include "rems/cli/session.hpp"

#include <cstdio>
#include <map>

#include "rems/backends/analytical.hpp"
#include "rems/backends/bridge.hpp"
#include "rems/backends/emulated.hpp"
#include "rems/error.hpp"
#include "rems/iosys/log_writer.hpp"
#include "rems/iosys/trajectory.hpp"

namespace rems {

Session::Session(const RunConfig& config, SessionMode mode) {
  RunOptions options = config.run;
  if (mode == SessionMode::serve) {
    if (!config.wants_endpoint()) {
      throw Error(ErrorKind::config_error,
                  "serve needs at least one robot with input = \"teleop\" or a \"broadcast\" output");
    }
    if (!config.realtime_factor_set) options.realtime_factor = 1.0;
  }
  runtime_ = std::make_unique<Runtime>(options);

  const bool any_teleop = std::any_of(config.robots.begin(), config.robots.end(),
                                      [](const RobotConfig& r) { return r.input == InputKind::teleop; });
  if (any_teleop) teleop_ = std::make_shared<TeleopHub>();
  if (config.wants_endpoint()) {
    server_ = std::make_shared<TelemetryServer>(config.bind_host, config.bind_port, teleop_);
  }

  std::shared_ptr<Broadcaster> broadcaster;
  std::map<std::filesystem::path, std::shared_ptr<LogWriter>> logs;
  for (const auto& rc : config.robots) {
    RobotSpec spec;
    spec.id = rc.id;
    spec.definition = rc.definition;
    spec.implementation_first = rc.implementation_first;
    switch (rc.kind) {
      case ImplementationKind::analytical:
        spec.backend = [] { return std::make_unique<AnalyticalBackend>(); };
        break;
      case ImplementationKind::emulated:
        spec.backend = [p = rc.profile] { return std::make_unique<EmulatedBackend>(p); };
        break;
      case ImplementationKind::bridge:
        spec.backend = [e = rc.endpoint] { return std::make_unique<BridgeBackend>(e); };
        break;
    }
    if (rc.input == InputKind::trajectory) {
      spec.input = std::make_shared<TrajectoryInput>(rc.trajectory ? *rc.trajectory : load_trajectory(rc.trajectory_path));
    } else if (rc.input == InputKind::teleop) {
      spec.input = teleop_;
    }
    for (const auto& dir : rc.log_dirs) {
      auto& log = logs[dir];
      if (!log) log = std::make_shared<LogWriter>(dir);
      spec.outputs.push_back(log);
    }
    if (rc.broadcast) {
      if (!broadcaster) broadcaster = std::make_shared<Broadcaster>(server_, config.broadcast_rate, options.dt);
      spec.outputs.push_back(broadcaster);
    }
    runtime_->add_robot(std::move(spec));
  }
}

Session::~Session() {
  if (server_) server_->stop();
}

RunReport Session::run() { return runtime_->run(); }

int exit_code(const RunReport& report) {
  for (const auto& r : report.robots) {
    if (r.stale_at_end || r.error) return 2;
  }
  return 0;
}

std::string summary_text(const RunReport& report) {
  char line[256];
  std::string s;
  std::snprintf(line, sizeof line, "%s %lld/%lld steps, t=%s s, wall %.3f s\n",
                report.interrupted ? "interrupted after" : "completed", static_cast<long long>(report.steps),
                static_cast<long long>(report.planned_steps), format_number(report.final_t).c_str(), report.wall_time);
  s += line;
  for (const auto& r : report.robots) {
    s += "  " + r.id + " (" + r.definition + ", " + r.implementation + "): ";
    if (r.error) {
      s += "FAILED: " + *r.error;
    } else if (r.stale_at_end) {
      s += "stale at end";
    } else if (!r.stale_intervals.empty()) {
      s += "ok, stale during " + std::to_string(r.stale_intervals.size()) + " interval(s)";
    } else {
      s += "ok";
    }
    s += "\n";
  }
  if (report.jobs.submitted > 0) {
    std::snprintf(line, sizeof line, "  jobs: %lld submitted, %lld done, %lld failed\n",
                  static_cast<long long>(report.jobs.submitted), static_cast<long long>(report.jobs.done),
                  static_cast<long long>(report.jobs.failed));
    s += line;
  }
  for (const auto& e : report.output_errors) s += "  output error: " + e + "\n";
  for (const auto& f : report.files) s += "  wrote " + f + "\n";
  return s;
}

}  // namespace rems
