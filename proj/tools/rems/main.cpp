// rems: validate, list, run and serve fleet configs.
#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <iostream>

#include "rems/backends/device_profile.hpp"
#include "rems/cli/config.hpp"
#include "rems/cli/session.hpp"
#include "rems/error.hpp"
#include "rems/robotdefs/builtins.hpp"
#include "rems/runtime/clock.hpp"

namespace {

std::atomic<rems::Runtime*> g_running{nullptr};

extern "C" void on_sigint(int) {
  if (auto* rt = g_running.load()) rt->request_stop();
  std::signal(SIGINT, SIG_DFL);  // a second ^C kills
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("rems");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("REMS_LOG_LEVEL")) {
    const auto level = spdlog::level::from_str(env);
    if (level == spdlog::level::off && std::string_view(env) != "off") {
      spdlog::warn("REMS_LOG_LEVEL='{}' is not a level (trace, debug, info, warn, error, critical, off)", env);
    } else {
      spdlog::set_level(level);
    }
  }
}

struct ConfigArgs {
  std::string path;
  std::vector<std::string> sets;
  std::optional<double> duration, dt, realtime_factor;
  std::optional<std::int64_t> seed;
  std::optional<std::string> out, bind;
  bool progress = false;

  void attach(CLI::App* cmd, bool runs) {
    cmd->add_option("config", path, "TOML run config")->required();
    cmd->add_option("--set", sets, "Override a config key, e.g. --set run.dt=0.001 or robot.wb.input=none");
    cmd->add_option("--duration", duration, "Simulated seconds");
    cmd->add_option("--dt", dt, "System timestep (s)");
    cmd->add_option("--realtime-factor", realtime_factor, "Pacing; 0 runs as fast as possible");
    cmd->add_option("--seed", seed, "Seed for sensor noise");
    cmd->add_option("--out", out, "Output directory (run_report.json, relative log dirs)");
    cmd->add_option("--bind", bind, "Telemetry/teleop endpoint host:port (default 127.0.0.1:8765)");
    if (runs) cmd->add_flag("--progress", progress, "One status line per simulated second on stderr");
  }

  std::vector<rems::Override> overrides() const {
    std::vector<rems::Override> ov;
    for (const auto& s : sets) ov.push_back(rems::Override::parse(s));
    auto num = [](double v) { return rems::format_number(v); };
    auto quote = [](const std::string& s) {
      std::string q = "\"";
      for (char c : s) q += (c == '"' || c == '\\') ? std::string("\\") + c : std::string(1, c);
      return q + "\"";
    };
    if (duration) ov.push_back({"run.duration", num(*duration)});
    if (dt) ov.push_back({"run.dt", num(*dt)});
    if (realtime_factor) ov.push_back({"run.realtime_factor", num(*realtime_factor)});
    if (seed) ov.push_back({"run.seed", std::to_string(*seed)});
    if (out) ov.push_back({"run.out", quote(std::filesystem::absolute(*out).string())});
    if (bind) ov.push_back({"run.bind", quote(*bind)});
    if (progress) ov.push_back({"run.progress", "true"});
    return ov;
  }
};

int list_builtins() {
  std::cout << "definitions:\n";
  for (const auto& name : rems::builtin_definition_names()) {
    const auto def = rems::builtin_definition(name);
    std::cout << "  " << name << "  input:";
    for (const auto& f : def.input_schema().fields()) std::cout << " " << f.key << "[" << f.spec.unit_name() << "]";
    std::cout << "\n";
  }
  std::cout << "profiles:\n";
  for (const auto& name : rems::builtin_profile_names()) {
    const auto p = rems::builtin_profile(name);
    std::cout << "  " << name << "  " << p.native_input.unit_name();
    if (const auto& r = p.native_input.range()) {
      std::cout << " [" << rems::format_number(r->lo) << ", " << rems::format_number(r->hi) << "]";
    }
    std::cout << " @ " << rems::format_number(p.device_rate) << " Hz";
    if (p.quantization > 0) std::cout << ", step " << rems::format_number(p.quantization);
    if (p.deadband > 0) std::cout << ", deadband " << rems::format_number(p.deadband);
    if (p.command_latency > 0) std::cout << ", latency " << rems::format_number(p.command_latency) << " s";
    std::cout << "\n";
  }
  std::cout << "implementations: analytical | emulated:<profile> | bridge:ws://host:port/path?rate=Hz\n"
            << "inputs: trajectory:<csv> | teleop | none\n"
            << "outputs: log | log:<dir> | broadcast\n";
  return 0;
}

int execute(const ConfigArgs& args, rems::SessionMode mode) {
  rems::RunConfig cfg;
  try {
    cfg = rems::parse_config(args.path, args.overrides());
  } catch (const rems::Error& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  try {
    rems::Session session(cfg, mode);
    if (auto* server = session.server()) {
      spdlog::info("telemetry and teleop on ws://{}:{}/ws", cfg.bind_host, server->port());
    }
    spdlog::info("{} robot(s), dt={} s, duration={} s", cfg.robots.size(), rems::format_number(cfg.run.dt),
                 rems::format_number(cfg.run.duration));
    g_running.store(&session.runtime());
    std::signal(SIGINT, on_sigint);
    const auto report = session.run();
    g_running.store(nullptr);
    std::cout << rems::summary_text(report) << std::flush;
    for (const auto& r : report.robots) {
      if (r.error) spdlog::warn("{}: {}", r.id, *r.error);
    }
    return rems::exit_code(report);
  } catch (const rems::Error& e) {
    g_running.store(nullptr);
    spdlog::error("{}", e.what());
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"rems: run robot fleets against analytical, emulated and bridged implementations"};
  app.require_subcommand(1);

  ConfigArgs run_args, validate_args, serve_args;
  auto* run = app.add_subcommand("run", "Execute a run; exit 0 clean, 2 if a robot ended stale, 1 on errors");
  run_args.attach(run, true);
  auto* validate = app.add_subcommand("validate", "Check a config and report every problem found");
  validate_args.attach(validate, false);
  app.add_subcommand("list", "List built-in definitions and device profiles");
  auto* serve = app.add_subcommand("serve", "Run with the /ws telemetry and teleop endpoint (paced at 1x by default)");
  serve_args.attach(serve, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (run->parsed()) return execute(run_args, rems::SessionMode::run);
    if (serve->parsed()) return execute(serve_args, rems::SessionMode::serve);
    if (validate->parsed()) {
      const auto cfg = rems::parse_config(validate_args.path, validate_args.overrides());
      std::cout << "ok: " << cfg.robots.size() << " robot(s), " << rems::step_count(cfg.run.duration, cfg.run.dt)
                << " steps of " << rems::format_number(cfg.run.dt) << " s\n";
      for (const auto& r : cfg.robots) {
        std::cout << "  " << r.id << ": " << r.definition.name() << " on " << r.implementation << "\n";
      }
      return 0;
    }
    return list_builtins();
  } catch (const rems::Error& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
}
