// Acceptance runner: one PASS/FAIL line per criterion, exit 1 if any fail.
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>
#include <unistd.h>

#include "oracles.hpp"
#include "rems/backends/analytical.hpp"
#include "rems/backends/bridge.hpp"
#include "rems/backends/emulated.hpp"
#include "rems/cli/config.hpp"
#include "rems/cli/session.hpp"
#include "rems/iosys/log_writer.hpp"
#include "rems/iosys/telemetry.hpp"
#include "rems/iosys/teleop.hpp"
#include "rems/iosys/trajectory.hpp"
#include "rems/net/websocket.hpp"
#include "rems/robotdefs/arm.hpp"
#include "rems/robotdefs/builtins.hpp"
#include "rems/runtime/clock.hpp"
#include "rems/runtime/runtime.hpp"

using namespace rems;
namespace fs = std::filesystem;
using Steady = std::chrono::steady_clock;

namespace {

/// Collects failed sub-checks and the measurements worth printing.
struct Verdict {
  std::vector<std::string> failures;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  void note(const std::string& s) { notes.push_back(s); }
};

std::string fmt(double v, const char* spec = "%.3g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

double seconds_since(Steady::time_point start) {
  return std::chrono::duration<double>(Steady::now() - start).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> first_column(const std::string& csv) {
  std::vector<std::string> out;
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) out.push_back(line.substr(0, line.find(',')));
  return out;
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("rems_acceptance_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

double percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size()))) - 1;
  return v[std::min(idx, v.size() - 1)];
}

BackendFactory analytical() {
  return [] { return std::make_unique<AnalyticalBackend>(); };
}

BackendFactory emulated(DeviceProfile p) {
  return [p] { return std::make_unique<EmulatedBackend>(p); };
}

DefRecord wheels(const RobotDefinition& def, double l, double r) {
  return make_record(def.input_schema(), {{"wh.l", l}, {"wh.r", r}});
}

/// Constant wheel input for every robot.
class ConstantInput final : public InputSystem {
 public:
  ConstantInput(double l, double r) : l_(l), r_(r) {}
  std::optional<DefRecord> sample(double, const RobotInfo& robot) override {
    return wheels(robot.definition, l_, r_);
  }

 private:
  double l_, r_;
};

/// Analytical model that throws from drive from a chosen time on.
class FailingBackend final : public Backend {
 public:
  explicit FailingBackend(double fail_at) : fail_at_(fail_at) {}
  std::string name() const override { return "failing"; }
  void check_compatible(const RobotDefinition& def) const override { inner_.check_compatible(def); }
  void init(const RobotDefinition& def, double t0, const BackendContext& ctx) override { inner_.init(def, t0, ctx); }
  void drive(const DefRecord& input, double t) override {
    if (t >= fail_at_ - 1e-9) throw Error(ErrorKind::io_error, "injected failure");
    inner_.drive(input, t);
  }
  DefRecord sense() override { return inner_.sense(); }
  DefRecord observe_state() override { return inner_.observe_state(); }
  void close() override { inner_.close(); }
  double device_timestep() const override { return 0; }

 private:
  double fail_at_;
  AnalyticalBackend inner_;
};

// 1 ---------------------------------------------------------------------------

void three_woodbots(Verdict& v) {
  const auto out = scratch("compare");
  const auto start = Steady::now();
  auto cfg = parse_config(fs::path(REMS_SOURCE_DIR) / "configs" / "woodbot_compare.toml",
                          {{"run.out", "\"" + out.string() + "\""}, {"run.duration", "10"}, {"run.dt", "0.01"}});
  v.check(cfg.robots.size() == 3, "three robots in the config");
  v.check(cfg.robots[1].profile.native_input.unit_name() == "duty" && cfg.robots[1].profile.device_rate == 5 &&
              cfg.robots[1].profile.deadband == 0.05,
          "hardware profile is duty, 5 Hz, deadband 0.05");
  const auto& sim = cfg.robots[2].profile;
  v.check(sim.native_input.unit_name() == "rad/s" && sim.device_rate == 1000 && sim.deadband == 0 &&
              sim.quantization == 0 && sim.command_latency == 0,
          "sim profile is rad/s, 1 kHz, no quirks");
  Session session(cfg, SessionMode::run);
  const auto report = session.run();
  const double wall = seconds_since(start);
  v.check(report.steps == 1000, "1000 steps");
  v.check(!report.any_stale(), "no robot stale");

  const auto dir = out / "logs";
  std::map<std::string, Trajectory> states;
  std::vector<std::string> t_ref;
  for (const char* id : {"model", "hardware", "sim"}) {
    for (const char* space : {"input", "state", "output"}) {
      const auto t_col = first_column(slurp(LogWriter::file_for(dir, id, space)));
      if (t_ref.empty()) t_ref = t_col;
      v.check(t_col == t_ref && t_col.size() == 1000, std::string("t column of ") + id + "_" + space);
    }
    states[id] = load_trajectory(LogWriter::file_for(dir, id, "state"));
  }
  auto divergence = [&](const char* a, const char* b) {
    const auto& A = states[a];
    const auto& B = states[b];
    const auto ix = *A.schema.index_of("x"), iy = *A.schema.index_of("y");
    double worst = 0;
    for (std::size_t i = 0; i < std::min(A.size(), B.size()); ++i) {
      worst = std::max(worst, std::hypot(A.rows[i][ix] - B.rows[i][ix], A.rows[i][iy] - B.rows[i][iy]));
    }
    return worst;
  };
  const double d_sim = divergence("model", "sim");
  const double d_hw = divergence("model", "hardware");
  v.check(d_sim <= 1e-6, "analytical vs webots-like within 1e-6 m");
  v.check(d_hw > 0 && d_hw < 0.5, "5 Hz duty divergence in (0, 0.5) m");
  v.check(wall < 5.0, "wall time < 5 s");
  v.note("webots-like " + fmt(d_sim) + " m, duty " + fmt(d_hw) + " m, wall " + fmt(wall) + " s");
  fs::remove_all(out);
}

// 2 ---------------------------------------------------------------------------

void unit_quirks(Verdict& v) {
  constexpr double pi = std::numbers::pi;
  const auto def = builtin_definition("woodbot");  // r = 0.035 m, 12 rad/s at full duty
  const double l = 6.0, r = -20.0;
  const auto in = wheels(def, l, r);
  const double dt = 0.01;
  const double t = 0.2;  // a device tick for every profile

  // Hand-computed native commands, per profile.
  const std::map<std::string, std::pair<double, double>> expected{
      {"webots", {6.0, -20.0}},
      {"dynabot", {57.0, -191.0}},                // 6*60/2pi = 57.30, -20*60/2pi = -190.99, 1 rpm steps
      {"woodbot", {128.0 / 255.0, -1.0}},         // 6/12 = 0.5 -> 127.5/255 rounds to even, -20/12 clamps
      {"create2", {210.0, -500.0}},               // 6*35 mm/s, -700 clamps
  };
  for (const auto& [name, lr] : expected) {
    EmulatedBackend b(builtin_profile(name));
    b.init(def, 0, {"q", 1, dt});
    b.drive(in, t);
    const auto eff = b.effective_command();
    const bool ok = std::abs(eff["wh.l"] - lr.first) <= 1e-9 && std::abs(eff["wh.r"] - lr.second) <= 1e-9;
    v.check(ok, name + " native command " + format_number(eff["wh.l"]) + ", " + format_number(eff["wh.r"]));
  }

  // The bare rpm factor, without integer steps.
  auto fine = builtin_profile("dynabot");
  fine.quantization = 0;
  EmulatedBackend rpm(fine);
  rpm.init(def, 0, {"q", 1, dt});
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-30, 30);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const double w = u(rng);
    const auto n = rpm.native_command(wheels(def, w, -w));
    worst = std::max({worst, std::abs(n["wh.l"] - w * 60 / (2 * pi)), std::abs(n["wh.r"] + w * 60 / (2 * pi))});
  }
  v.check(worst <= 1e-9, "rpm factor 60/(2pi)");

  // Count clamp on both sides, and duty deadband zeroing.
  EmulatedBackend counts(builtin_profile("create2"));
  counts.init(def, 0, {"q", 1, dt});
  const auto c = counts.native_command(wheels(def, 1000, -1000));
  v.check(c["wh.l"] == 500 && c["wh.r"] == -500, "count clamp at +-500");
  EmulatedBackend duty(builtin_profile("woodbot"));
  duty.init(def, 0, {"q", 1, dt});
  const auto small = duty.native_command(wheels(def, 0.05 * 12 * 0.99, -0.05 * 12 * 0.99));
  const auto edge = duty.native_command(wheels(def, 0.05 * 12 * 1.01, 0));
  v.check(small["wh.l"] == 0 && small["wh.r"] == 0, "duty below deadband is zeroed");
  v.check(edge["wh.l"] > 0, "duty above deadband passes");
  for (int k = 1; k <= 100; ++k) duty.drive(wheels(def, 0.5, 0.5), step_time(k, dt));
  v.check(duty.effective_command()["wh.l"] == 0 && duty.observe_state()["x"] == 0, "deadband keeps the robot still");
  v.note("rpm factor error " + fmt(worst));
}

// 3 ---------------------------------------------------------------------------

void kinematics(Verdict& v) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  auto pos = [&](double lo, double hi) { return lo + (hi - lo) * (u(rng) + 1) / 2; };

  double worst_dd = 0, worst_mk = 0;
  for (int i = 0; i < 10000; ++i) {
    const DiffDriveParams<double> dd(pos(0.01, 0.2), pos(0.05, 0.6));
    const Twist2d a{2 * u(rng), 0, 3 * u(rng)};
    const auto b = diffdrive_fk(diffdrive_ik(a, dd), dd);
    worst_dd = std::max({worst_dd, std::abs(a.vx - b.vx), std::abs(b.vy), std::abs(a.wz - b.wz)});
    const MecanumParams<double> mk(pos(0.02, 0.1), pos(0.1, 0.4), pos(0.1, 0.4));
    const Twist2d c{2 * u(rng), 2 * u(rng), 3 * u(rng)};
    const auto d = mecanum_fk(mecanum_ik(c, mk), mk);
    worst_mk = std::max({worst_mk, std::abs(c.vx - d.vx), std::abs(c.vy - d.vy), std::abs(c.wz - d.wz)});
  }
  v.check(worst_dd <= 1e-12, "diffdrive fk(ik) round trip");
  v.check(worst_mk <= 1e-12, "mecanum fk(ik) round trip");

  // Exact flow stepped at 1e-4 against RK4, for several constant twists.
  double worst_pose = 0;
  for (int trial = 0; trial < 4; ++trial) {
    const Twist2d t{u(rng), trial % 2 ? u(rng) : 0.0, 2 * u(rng)};
    const Pose2d p0{u(rng), u(rng), 3 * u(rng)};
    Pose2d p = p0;
    for (int i = 0; i < 100000; ++i) p = integrate_pose(p, t, 1e-4);
    const Eigen::Vector3d ref = oracle::rk4_pose({p0.x, p0.y, p0.theta}, t.vx, t.vy, t.wz, 10.0, 1e-4);
    worst_pose = std::max({worst_pose, std::abs(p.x - ref.x()), std::abs(p.y - ref.y()),
                           std::abs(normalize_angle(p.theta - ref.z()))});
  }
  v.check(worst_pose <= 1e-6, "integrate_pose vs RK4 over 10 s");

  double worst_arm = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<ArmLink<double>> links;
    std::vector<oracle::ChainLink> ref;
    std::vector<double> q;
    Eigen::VectorXd joints(6);
    for (int i = 0; i < 6; ++i) {
      const Eigen::Vector3d axis = Eigen::Vector3d(u(rng), u(rng), u(rng)).normalized();
      const Eigen::Vector3d offset(u(rng), u(rng), u(rng));
      const Eigen::Vector4d qv = Eigen::Vector4d(u(rng), u(rng), u(rng), u(rng)).normalized();
      links.push_back({axis, offset, Eigen::Quaterniond(qv(0), qv(1), qv(2), qv(3))});
      ref.push_back({axis, offset, qv(0), qv(1), qv(2), qv(3)});
      joints(i) = std::numbers::pi * u(rng);
      q.push_back(joints(i));
    }
    const auto pose = arm_fk(joints, ArmParamsd(links));
    const Eigen::Matrix4d T = oracle::chain_transform(ref, q);
    worst_arm = std::max({worst_arm, (pose.position - T.topRightCorner<3, 1>()).cwiseAbs().maxCoeff(),
                          (pose.orientation.toRotationMatrix() - T.topLeftCorner<3, 3>()).cwiseAbs().maxCoeff()});
  }
  v.check(worst_arm <= 1e-9, "arm_fk vs homogeneous chain");
  v.note("fk/ik " + fmt(std::max(worst_dd, worst_mk)) + ", pose " + fmt(worst_pose) + ", arm " + fmt(worst_arm));
}

// 4 ---------------------------------------------------------------------------

void composition(Verdict& v) {
  const auto base = builtin_definition("omnibase");
  const auto arm = builtin_definition("arm5");
  const auto both = merge_definitions(base, arm);
  v.check(both.input_schema().fields().size() == 9, "9 input keys");

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1, 1);
  bool same = true;
  for (int i = 0; i < 1000; ++i) {
    ValueMap vals;
    for (const auto& k : both.input_schema().keys()) vals[k] = 5 * u(rng);
    const auto rec = make_record(both.input_schema(), vals);
    const auto merged = both.drive_map(rec);
    const auto a = base.drive_map(project(rec, base.input_schema()));
    const auto b = arm.drive_map(project(rec, arm.input_schema()));
    if (merged.size() != 2) {
      same = false;
      break;
    }
    const auto tm = std::get<Twist2d>(merged[0]);
    const auto ta = std::get<Twist2d>(a[0]);
    same = same && tm.vx == ta.vx && tm.vy == ta.vy && tm.wz == ta.wz &&
           std::get<Eigen::VectorXd>(merged[1]) == std::get<Eigen::VectorXd>(b[0]);
  }
  v.check(same, "merged dispatch equals per-part dispatch");

  bool collided = false;
  try {
    merge_definitions(base, base);
  } catch (const Error& e) {
    collided = e.kind() == ErrorKind::key_collision;
  }
  v.check(collided, "duplicate keys raise KeyCollision");

  const auto moose = builtin_definition("moose");
  const auto masters = make_record(moose.input_schema(), {{"wh.l", 1.5}, {"wh.r", -2}});
  const auto all = expand_wheel_links(masters, moose.wheel_links());
  int left = 0, right = 0;
  for (std::size_t i = 0; i < all.values().size(); ++i) {
    const auto& key = all.schema().field(i).key;
    if (key.rfind("wh.l", 0) == 0 && all.at(i) == 1.5) ++left;
    if (key.rfind("wh.r", 0) == 0 && all.at(i) == -2) ++right;
  }
  v.check(moose.input_schema().fields().size() == 2, "moose has 2 master inputs");
  v.check(all.schema().fields().size() == 8 && left == 4 && right == 4, "2 masters expand to 8 wheels");
}

// 5 ---------------------------------------------------------------------------

void scheduler(Verdict& v) {
  const auto wb = builtin_definition("woodbot");
  {
    std::mutex mu;
    std::map<std::string, std::vector<std::int64_t>> ticks;
    Runtime rt({.dt = 0.01, .duration = 10.0});
    rt.set_phase_trace([&](std::int64_t k, Phase phase, std::string_view robot) {
      if (phase != Phase::drive) return;
      std::lock_guard lock(mu);
      ticks[std::string(robot)].push_back(k);
    });
    rt.add_system_input(std::make_shared<ConstantInput>(3, 4));
    rt.add_robot({"a", wb, analytical()});
    rt.add_robot({"b", wb, emulated(builtin_profile("woodbot"))});
    rt.add_robot({"c", builtin_definition("create2"), emulated(builtin_profile("create2"))});
    const auto report = rt.run();
    std::vector<std::int64_t> expected(1000);
    for (std::int64_t k = 0; k < 1000; ++k) expected[k] = k + 1;
    v.check(report.steps == 1000, "1000 steps");
    v.check(ticks.size() == 3, "three robots traced");
    for (const auto& [id, seq] : ticks) v.check(seq == expected, "tick sequence of " + id);
  }

  // device_due at 5 Hz, per simulated second, for a few system timesteps.
  int lo = 1 << 30, hi = 0;
  for (const double dt : {0.01, 0.001, 0.003, 0.007, 0.05}) {
    const auto steps = step_count(10.0, dt);
    std::vector<int> per_second(10, 0);
    for (std::int64_t k = 1; k <= steps; ++k) {
      if (!device_due(k, dt, 5.0)) continue;
      const auto s = static_cast<std::size_t>(std::floor(step_time(k, dt) - 1e-9));
      if (s < per_second.size()) ++per_second[s];
    }
    for (int n : per_second) {
      lo = std::min(lo, n);
      hi = std::max(hi, n);
    }
  }
  v.check(lo >= 4 && hi <= 6, "5 Hz fires 5 +- 1 per second");

  // Seeded runs with sensor noise.
  auto noisy = builtin_profile("create2");
  noisy.noise_std = 5.0;
  auto seeded = [&](const fs::path& dir, std::uint64_t seed) {
    Runtime rt({.dt = 0.01, .duration = 5.0, .seed = seed});
    rt.add_system_input(std::make_shared<ConstantInput>(5, 6));
    auto log = std::make_shared<LogWriter>(dir);
    rt.add_robot({"noisy", wb, emulated(noisy), nullptr, {log}});
    rt.add_robot({"duty", wb, emulated(builtin_profile("woodbot")), nullptr, {log}});
    rt.run();
  };
  const auto s1 = scratch("seed1"), s2 = scratch("seed2"), s3 = scratch("seed3");
  seeded(s1, 9);
  seeded(s2, 9);
  seeded(s3, 10);
  bool identical = true;
  for (const char* id : {"noisy", "duty"}) {
    for (const char* space : {"input", "state", "output"}) {
      identical = identical && slurp(LogWriter::file_for(s1, id, space)) == slurp(LogWriter::file_for(s2, id, space));
    }
  }
  v.check(identical, "identical seeded runs give byte-identical logs");
  v.check(slurp(LogWriter::file_for(s1, "noisy", "output")) != slurp(LogWriter::file_for(s3, "noisy", "output")),
          "a different seed changes the noisy output");

  // Robot A fails at t = 1 s; B must match a solo run.
  const auto solo = scratch("solo"), pair = scratch("pair");
  {
    Runtime rt({.dt = 0.01, .duration = 3.0});
    rt.add_system_input(std::make_shared<ConstantInput>(3, 4));
    rt.add_robot({"b", wb, emulated(builtin_profile("dynabot")), nullptr, {std::make_shared<LogWriter>(solo)}});
    rt.run();
  }
  RunReport both;
  {
    Runtime rt({.dt = 0.01, .duration = 3.0});
    rt.add_system_input(std::make_shared<ConstantInput>(3, 4));
    auto log = std::make_shared<LogWriter>(pair);
    rt.add_robot({"a", wb, [] { return std::make_unique<FailingBackend>(1.0); }, nullptr, {log}});
    rt.add_robot({"b", wb, emulated(builtin_profile("dynabot")), nullptr, {log}});
    both = rt.run();
  }
  v.check(both.robots.size() == 2 && both.robots[0].error.has_value(), "robot A failed");
  bool isolated = true;
  for (const char* space : {"input", "state", "output"}) {
    isolated = isolated && slurp(LogWriter::file_for(solo, "b", space)) == slurp(LogWriter::file_for(pair, "b", space));
  }
  v.check(isolated, "robot B log byte-identical to the solo run");
  for (const auto& d : {s1, s2, s3, solo, pair}) fs::remove_all(d);
  v.note("5 Hz count per second in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

// 6 ---------------------------------------------------------------------------

void jobs(Verdict& v) {
  const auto wb = builtin_definition("woodbot");
  const RunOptions opts{.dt = 0.01, .duration = 5.0, .realtime_factor = 1.0};

  struct Job {
    std::atomic<bool> finished{false};
    std::atomic<int> delivered{0};
    bool finished_first = false;
    bool at_boundary = false;
  };
  struct Submitter final : ProcessSystem {
    explicit Submitter(std::vector<Job>& j) : jobs(j) {}
    std::vector<InputOverride> process(const StepSnapshot& s, JobPool& pool) override {
      if (s.k != 5) return {};
      std::mt19937 rng(6);
      for (std::size_t i = 0; i < jobs.size(); ++i) {
        const auto ms = std::chrono::milliseconds(20 + rng() % 2000);
        pool.submit(
            "job" + std::to_string(i),
            [this, i, ms]() -> std::any {
              std::this_thread::sleep_for(ms);
              jobs[i].finished = true;
              return {};
            },
            [this, i](const JobOutcome&) {
              jobs[i].finished_first = jobs[i].finished.load();
              jobs[i].at_boundary = phase.load() == Phase::callbacks;
              ++jobs[i].delivered;
            });
      }
      return {};
    }
    std::vector<Job>& jobs;
    std::atomic<Phase> phase{Phase::input};
  };

  auto run = [&](bool with_jobs, std::vector<Job>* js) {
    Runtime rt(opts);
    rt.add_system_input(std::make_shared<ConstantInput>(3, 4));
    for (const char* id : {"a", "b", "c"}) rt.add_robot({id, wb, emulated(builtin_profile("dynabot"))});
    if (with_jobs) {
      auto sub = std::make_shared<Submitter>(*js);
      rt.set_phase_trace([sub](std::int64_t, Phase p, std::string_view robot) {
        if (robot.empty()) sub->phase = p;
      });
      rt.add_process(sub);
      return rt.run();
    }
    return rt.run();
  };

  const auto baseline = run(false, nullptr);
  std::vector<Job> js(10);
  const auto loaded = run(true, &js);
  bool once = true, after = true, boundary = true;
  for (const auto& j : js) {
    once = once && j.delivered == 1;
    after = after && j.finished_first;
    boundary = boundary && j.at_boundary;
  }
  v.check(once, "each callback delivered exactly once");
  v.check(after, "callbacks run after their job completed");
  v.check(boundary, "callbacks run in the step-boundary phase");
  v.check(loaded.jobs.delivered == 10, "pool reports 10 delivered");
  const double p0 = percentile(baseline.step_periods, 0.99);
  const double p1 = percentile(loaded.step_periods, 0.99);
  const double delta = std::abs(p1 - p0) / p0;
  v.check(delta < 0.2, "step period p99 within 20% of the no-jobs run");
  v.note("p99 " + fmt(p0 * 1e3, "%.3f") + " ms vs " + fmt(p1 * 1e3, "%.3f") + " ms, delta " +
         fmt(delta * 100, "%.1f") + "%");
}

// 7 ---------------------------------------------------------------------------

void replay(Verdict& v) {
  const auto wb = builtin_definition("woodbot");
  const auto first = scratch("teleop"), second = scratch("replay");
  const RunOptions opts{.dt = 0.01, .duration = 3.0, .realtime_factor = 1.0, .seed = 5};
  {
    // A client drives the robot over /ws while the run is paced in real time.
    auto hub = std::make_shared<TeleopHub>();
    auto server = std::make_shared<TelemetryServer>("127.0.0.1", 0, hub);
    net::WsClient client({{}, {}});
    client.connect("127.0.0.1", server->port(), std::string(kTelemetryPath), std::chrono::milliseconds(2000));
    Runtime rt(opts);
    rt.add_robot({"wb", wb, emulated(builtin_profile("dynabot")), hub, {std::make_shared<LogWriter>(first)}});
    std::thread driver([&] {
      const char* frames[] = {R"({"type":"teleop","keys":{"fwd":1}})",
                              R"({"type":"teleop","keys":{"fwd":0.4,"turn":-0.7}})",
                              R"({"type":"teleop","keys":{"turn":1}})", R"({"type":"teleop","keys":{}})"};
      std::mt19937 rng(7);
      for (const char* f : frames) {
        std::this_thread::sleep_for(std::chrono::milliseconds(200 + rng() % 400));
        client.send(f);
      }
    });
    rt.run();
    driver.join();
    client.close();
    v.check(server->teleop_accepted() == 4, "four teleop frames accepted");
  }
  {
    Runtime rt(RunOptions{.dt = opts.dt, .duration = opts.duration, .seed = opts.seed});
    auto input = std::make_shared<TrajectoryInput>(load_trajectory(LogWriter::file_for(first, "wb", "input")));
    rt.add_robot({"wb", wb, emulated(builtin_profile("dynabot")), input, {std::make_shared<LogWriter>(second)}});
    rt.run();
  }
  const auto a = slurp(LogWriter::file_for(first, "wb", "state"));
  const auto b = slurp(LogWriter::file_for(second, "wb", "state"));
  const auto inputs = slurp(LogWriter::file_for(first, "wb", "input"));
  v.check(std::count(inputs.begin(), inputs.end(), '\n') == 301, "input log has every step");
  const auto moved = load_trajectory(LogWriter::file_for(first, "wb", "state"));
  v.check(moved.size() == 300 && moved.rows.back()[*moved.schema.index_of("x")] != 0, "the run moved the robot");
  v.check(a == b, "replayed state log is byte-identical");
  v.note(std::to_string(a.size()) + " bytes of state log");
  fs::remove_all(first);
  fs::remove_all(second);
}

// 8 ---------------------------------------------------------------------------

void bridge(Verdict& v) {
  const auto wb = builtin_definition("woodbot");
  const double dt = 0.01;

  // Loopback: every sense answers within two device ticks.
  {
    BridgeServer server(wb, std::make_unique<AnalyticalBackend>());
    BridgeBackend b(BridgeEndpoint::parse(server.url(100)));
    b.init(wb, 0, {"r", 1, dt});
    std::vector<double> rtt;
    bool fresh = true;
    for (int k = 1; k <= 500; ++k) {
      const auto start = Steady::now();
      b.drive(wheels(wb, 4, 6), step_time(k, dt));
      fresh = fresh && !b.sense().stale();
      rtt.push_back(seconds_since(start));
    }
    const double worst = *std::max_element(rtt.begin(), rtt.end());
    v.check(fresh, "loopback readings fresh");
    v.check(worst < 2 * b.device_timestep(), "loopback round trip within 2 device ticks");
    v.note("rtt max " + fmt(worst * 1e3, "%.2f") + " ms of " + fmt(2 * b.device_timestep() * 1e3, "%.0f") + " ms");
    b.close();
  }

  // Silent device inside a fleet.
  {
    BridgeServerOptions opts;
    opts.silent = true;
    BridgeServer server(wb, std::make_unique<AnalyticalBackend>(), opts);
    const auto endpoint = BridgeEndpoint::parse(server.url(20));
    const double timeout = BridgeBackend(endpoint).timeout().count();
    struct Watch final : OutputSystem {
      std::string name() const override { return "watch"; }
      void consume(const StepSnapshot& s) override {
        if (!first_stale && s.robots[0].stale) first_stale = seconds_since(start);
        last_x = s.robots[1].state["x"];
      }
      Steady::time_point start = Steady::now();
      std::optional<double> first_stale;
      double last_x = 0;
    };
    auto watch = std::make_shared<Watch>();
    Runtime rt({.dt = dt, .duration = 2.0});
    rt.add_system_input(std::make_shared<ConstantInput>(4, 4));
    rt.add_robot({"remote", wb, [endpoint] { return std::make_unique<BridgeBackend>(endpoint); }, nullptr, {watch}});
    rt.add_robot({"local", wb, analytical(), nullptr, {watch}});
    watch->start = Steady::now();
    const auto report = rt.run();
    v.check(watch->first_stale.has_value(), "silent device flagged stale");
    v.check(watch->first_stale.value_or(1e9) <= timeout + 0.05, "stale within the timeout");
    v.check(report.steps == 200, "fleet ran every step");
    v.check(report.robots[0].stale_at_end && !report.robots[1].stale_at_end, "only the silent robot is stale");
    v.check(std::abs(watch->last_x - 2.0 * 4 * 0.035) < 1e-9, "the other robot kept moving");
    v.note("stale after " + fmt(watch->first_stale.value_or(-1)) + " s, timeout " + fmt(timeout) + " s");
  }

  // Schema-hash mismatch.
  {
    BridgeServerOptions opts;
    opts.forced_hashes = SchemaHashes{"0", "0", "0"};
    BridgeServer server(wb, std::make_unique<AnalyticalBackend>(), opts);
    BridgeBackend b(BridgeEndpoint::parse(server.url()));
    std::optional<ErrorKind> kind;
    try {
      b.init(wb, 0, {});
    } catch (const Error& e) {
      kind = e.kind();
    }
    v.check(kind == ErrorKind::schema_hash_mismatch, "handshake rejected with SchemaHashMismatch");
    v.check(server.frames_received() == 1, "nothing but hello reached the device");
  }
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void(Verdict&)>>> criteria{
      {"three woodbots, one trajectory", three_woodbots},
      {"unit quirks", unit_quirks},
      {"kinematics oracles", kinematics},
      {"composition", composition},
      {"scheduler properties", scheduler},
      {"background jobs", jobs},
      {"replay closure", replay},
      {"bridge robustness", bridge},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      criteria[i].second(v);
    } catch (const std::exception& e) {
      v.failures.push_back(std::string("threw: ") + e.what());
    }
    std::string line = (v.failures.empty() ? "PASS " : "FAIL ") + std::to_string(i + 1) + " " + criteria[i].first;
    std::string detail;
    for (const auto& n : v.notes) detail += (detail.empty() ? "" : "; ") + n;
    for (const auto& f : v.failures) detail += (detail.empty() ? "failed: " : "; failed: ") + f;
    if (!detail.empty()) line += " (" + detail + ")";
    std::printf("%s\n", line.c_str());
    std::fflush(stdout);
    failed += v.failures.empty() ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
