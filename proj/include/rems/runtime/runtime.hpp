#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rems/backends/backend.hpp"
#include "rems/runtime/jobs.hpp"
#include "rems/runtime/systems.hpp"

namespace rems {

struct RunOptions {
  double dt = 0.01;
  double duration = 10.0;
  double realtime_factor = 0.0;  // 0 = as fast as possible
  std::uint64_t seed = 0;
  /// Where run_report.json goes; empty = not written.
  std::filesystem::path out_dir;
  /// One status line on stderr per simulated second.
  bool progress = false;
  std::size_t job_threads = 2;

  /// Throws InvalidArgument.
  void validate() const;
};

using BackendFactory = std::function<BackendPtr()>;

struct RobotSpec {
  std::string id;
  RobotDefinition definition;
  BackendFactory backend;
  /// Per-robot input; wins over system-wide inputs.
  std::shared_ptr<InputSystem> input;
  std::vector<std::shared_ptr<OutputSystem>> outputs;
  /// Let the implementation's sensor output win over a definition override.
  bool implementation_first = false;
};

struct RobotHandle {
  std::size_t index = 0;
  std::string id;
  std::string definition;
  std::string implementation;
};

struct StaleInterval {
  double from = 0.0;
  double to = 0.0;  // last stale tick
};

struct RobotReport {
  std::string id;
  std::string definition;
  std::string implementation;
  bool stale_at_end = false;
  std::vector<StaleInterval> stale_intervals;
  std::optional<std::string> error;
};

struct RunReport {
  std::int64_t steps = 0;
  std::int64_t planned_steps = 0;
  double final_t = 0.0;
  double wall_time = 0.0;
  bool interrupted = false;
  std::vector<RobotReport> robots;
  std::vector<std::string> files;
  std::vector<std::string> output_errors;
  JobSummary jobs;
  /// Wall-clock time between consecutive step starts (s); not serialized.
  std::vector<double> step_periods;

  bool any_stale() const noexcept;
  std::string to_json() const;
};

enum class Phase { input, drive, sense, process, output, callbacks };
std::string_view to_string(Phase p) noexcept;

/// Observes phase boundaries; `robot` is empty for fleet-wide phases.
/// Called from the orchestrator and from robot workers.
using PhaseTrace = std::function<void(std::int64_t k, Phase phase, std::string_view robot)>;

/// Runs a fleet on one shared discrete clock. Each step: sample inputs, step
/// every robot on its own worker (drive, sense, observe), run process
/// systems, hand the snapshot to output systems, deliver finished job
/// callbacks.
class Runtime {
 public:
  explicit Runtime(RunOptions options);
  ~Runtime();
  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  /// Throws SchemaIncompatible, RunAlreadyStarted, InvalidArgument (duplicate id).
  RobotHandle add_robot(RobotSpec spec);
  void add_system_input(std::shared_ptr<InputSystem> input);
  void add_process(std::shared_ptr<ProcessSystem> process);
  void set_phase_trace(PhaseTrace trace);

  /// Throws InitFailure (nothing is stepped) or RunAlreadyStarted.
  RunReport run();
  /// Graceful stop after the current step; safe from any thread or a signal
  /// handler.
  void request_stop() noexcept { stop_requested_.store(true); }

  const RunOptions& options() const noexcept { return options_; }
  JobPool& jobs() noexcept { return *jobs_; }

 private:
  struct Robot;

  RunOptions options_;
  std::vector<std::unique_ptr<Robot>> robots_;
  std::vector<std::shared_ptr<InputSystem>> system_inputs_;
  std::vector<std::shared_ptr<ProcessSystem>> processes_;
  PhaseTrace trace_;
  std::unique_ptr<JobPool> jobs_;
  std::atomic<bool> stop_requested_{false};
  bool started_ = false;
};

}  // namespace rems
