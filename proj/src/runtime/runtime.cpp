#include "rems/runtime/runtime.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <map>
#include <thread>

#include "rems/runtime/clock.hpp"
#include "rems/runtime/mailbox.hpp"

namespace rems {

namespace {

using SteadyClock = std::chrono::steady_clock;

struct StepCommand {
  std::int64_t k = 0;
  double t = 0.0;
  DefRecord input;
  bool stop = false;
};

struct StepResult {
  std::int64_t k = 0;
  DefRecord state;
  DefRecord output;
  bool stale = false;
  std::optional<std::string> error;
  std::optional<ErrorKind> kind;
};

}  // namespace

void RunOptions::validate() const {
  if (!(dt > 0) || !std::isfinite(dt)) throw Error(ErrorKind::invalid_argument, "dt must be positive");
  if (!(duration > 0) || !std::isfinite(duration)) throw Error(ErrorKind::invalid_argument, "duration must be positive");
  if (!(realtime_factor >= 0) || !std::isfinite(realtime_factor)) {
    throw Error(ErrorKind::invalid_argument, "realtime_factor must be >= 0");
  }
}

std::string_view to_string(Phase p) noexcept {
  switch (p) {
    case Phase::input: return "input";
    case Phase::drive: return "drive";
    case Phase::sense: return "sense";
    case Phase::process: return "process";
    case Phase::output: return "output";
    case Phase::callbacks: return "callbacks";
  }
  return "?";
}

bool RunReport::any_stale() const noexcept {
  return std::any_of(robots.begin(), robots.end(),
                     [](const RobotReport& r) { return r.stale_at_end || !r.stale_intervals.empty() || r.error; });
}

std::string RunReport::to_json() const {
  nlohmann::ordered_json j;
  j["steps"] = steps;
  j["planned_steps"] = planned_steps;
  j["final_t"] = final_t;
  j["wall_time_s"] = wall_time;
  j["interrupted"] = interrupted;
  auto robots_json = nlohmann::ordered_json::array();
  for (const auto& r : robots) {
    nlohmann::ordered_json rj;
    rj["id"] = r.id;
    rj["definition"] = r.definition;
    rj["implementation"] = r.implementation;
    rj["stale_at_end"] = r.stale_at_end;
    auto intervals = nlohmann::ordered_json::array();
    for (const auto& s : r.stale_intervals) intervals.push_back({s.from, s.to});
    rj["stale_intervals"] = std::move(intervals);
    rj["error"] = r.error ? nlohmann::ordered_json(*r.error) : nlohmann::ordered_json(nullptr);
    robots_json.push_back(std::move(rj));
  }
  j["robots"] = std::move(robots_json);
  j["files"] = files;
  j["output_errors"] = output_errors;
  j["jobs"] = {{"submitted", jobs.submitted}, {"done", jobs.done}, {"failed", jobs.failed}, {"delivered", jobs.delivered}};
  return j.dump(2);
}

struct Runtime::Robot {
  RobotSpec spec;
  RobotInfo info;
  BackendPtr backend;  // moved into the worker at run()
  Mailbox<StepCommand> commands;
  Mailbox<StepResult> results;
  std::thread worker;

  DefRecord input;
  DefRecord state;
  DefRecord output;
  bool stale = false;
  bool failed = false;
  std::optional<std::string> error;
  std::vector<StaleInterval> stale_intervals;
  std::optional<DefRecord> pending_override;

  void mark(double t, double dt, bool is_stale) {
    stale = is_stale;
    if (!is_stale) return;
    if (!stale_intervals.empty() && std::abs(stale_intervals.back().to - (t - dt)) < dt * 1e-6) {
      stale_intervals.back().to = t;
    } else {
      stale_intervals.push_back({t, t});
    }
  }
};

Runtime::Runtime(RunOptions options) : options_(std::move(options)) {
  options_.validate();
  jobs_ = std::make_unique<JobPool>(options_.job_threads);
}

Runtime::~Runtime() {
  for (auto& r : robots_) {
    if (r->worker.joinable()) {
      r->commands.push(StepCommand{0, 0.0, {}, true});
      r->worker.join();
    }
  }
}

RobotHandle Runtime::add_robot(RobotSpec spec) {
  if (started_) throw Error(ErrorKind::run_already_started, "robots must be added before run()");
  if (spec.id.empty()) throw Error(ErrorKind::invalid_argument, "robot id must not be empty");
  for (const auto& r : robots_) {
    if (r->spec.id == spec.id) throw Error(ErrorKind::invalid_argument, "duplicate robot id '" + spec.id + "'");
  }
  if (!spec.backend) throw Error(ErrorKind::invalid_argument, "robot '" + spec.id + "' has no backend");
  auto robot = std::make_unique<Robot>();
  robot->backend = spec.backend();
  robot->backend->check_compatible(spec.definition);
  robot->info = RobotInfo{spec.id, spec.definition, robot->backend->name()};
  robot->spec = std::move(spec);
  robot->input = make_record(robot->info.definition.input_schema());
  RobotHandle handle{robots_.size(), robot->info.id, robot->info.definition.name(), robot->info.implementation};
  robots_.push_back(std::move(robot));
  return handle;
}

void Runtime::add_system_input(std::shared_ptr<InputSystem> input) {
  if (started_) throw Error(ErrorKind::run_already_started, "inputs must be added before run()");
  system_inputs_.push_back(std::move(input));
}

void Runtime::add_process(std::shared_ptr<ProcessSystem> process) {
  if (started_) throw Error(ErrorKind::run_already_started, "process systems must be added before run()");
  processes_.push_back(std::move(process));
}

void Runtime::set_phase_trace(PhaseTrace trace) { trace_ = std::move(trace); }

RunReport Runtime::run() {
  if (started_) throw Error(ErrorKind::run_already_started, "a runtime runs once");
  if (robots_.empty()) throw Error(ErrorKind::invalid_argument, "a run needs at least one robot");
  started_ = true;
  const auto wall_start = SteadyClock::now();
  const double dt = options_.dt;
  const std::int64_t k_max = step_count(options_.duration, dt);
  const PhaseTrace trace = trace_;

  RunReport report;
  report.planned_steps = k_max;

  // Workers: init, then one drive/sense/observe per command.
  for (auto& rp : robots_) {
    Robot& r = *rp;
    BackendContext ctx{r.info.id, options_.seed, dt};
    r.worker = std::thread([&r, ctx, trace, backend = std::move(r.backend)]() mutable {
      const auto& def = r.info.definition;
      auto compose = [&](const DefRecord& state, const DefRecord& impl_out) {
        const auto& override_sense = def.overrides().sense;
        if (!override_sense || r.spec.implementation_first) return impl_out;
        return override_sense(state, impl_out).with_stale(impl_out.stale());
      };
      bool usable = true;
      try {
        backend->init(def, 0.0, ctx);
        const auto out = backend->sense();
        const auto state = backend->observe_state();
        r.results.push(StepResult{0, state, compose(state, out), out.stale() || state.stale(), {}, {}});
      } catch (const Error& e) {
        usable = false;
        r.results.push(StepResult{0, {}, {}, true, std::string(e.what()), e.kind()});
      } catch (const std::exception& e) {
        usable = false;
        r.results.push(StepResult{0, {}, {}, true, std::string(e.what()), ErrorKind::init_failure});
      }
      for (;;) {
        StepCommand cmd = r.commands.pop_latest();
        if (cmd.stop) break;
        if (!usable) continue;
        try {
          if (trace) trace(cmd.k, Phase::drive, r.info.id);
          backend->drive(cmd.input, cmd.t);
          if (trace) trace(cmd.k, Phase::sense, r.info.id);
          const auto out = backend->sense();
          const auto state = backend->observe_state();
          r.results.push(StepResult{cmd.k, state, compose(state, out), out.stale() || state.stale(), {}, {}});
        } catch (const std::exception& e) {
          usable = false;
          r.results.push(StepResult{cmd.k, {}, {}, true, std::string(e.what()), {}});
        }
      }
      try {
        backend->close();
      } catch (...) {
      }
    });
  }

  auto stop_workers = [&] {
    for (auto& r : robots_) {
      if (r->worker.joinable()) {
        r->commands.push(StepCommand{0, 0.0, {}, true});
        r->worker.join();
      }
    }
  };

  // Init results.
  std::vector<std::string> init_errors;
  for (auto& rp : robots_) {
    Robot& r = *rp;
    StepResult res = r.results.pop();
    if (!res.error) {
      r.state = res.state;
      r.output = res.output;
      r.stale = res.stale;
      continue;
    }
    if (res.kind == ErrorKind::connection_lost) {
      // Unreachable remote: the robot starts stale and stays frozen.
      r.failed = true;
      r.error = res.error;
      r.state = r.info.definition.state_record(r.info.definition.initial_part_states()).with_stale(true);
      r.output = make_record(r.info.definition.output_schema()).with_stale(true);
      r.stale = true;
    } else {
      init_errors.push_back(r.info.id + ": " + *res.error);
    }
  }
  if (!init_errors.empty()) {
    stop_workers();
    std::string msg = "initialization failed";
    for (const auto& e : init_errors) msg += "\n  " + e;
    throw Error(ErrorKind::init_failure, msg);
  }

  std::vector<RobotInfo> infos;
  for (const auto& r : robots_) infos.push_back(r->info);
  for (auto& in : system_inputs_) in->setup(infos);
  for (auto& r : robots_) {
    if (r->spec.input) r->spec.input->setup({r->info});
  }
  for (auto& p : processes_) p->setup(infos, *jobs_);

  // Output systems, each with the robots attached to it.
  struct OutputSlot {
    std::shared_ptr<OutputSystem> system;
    std::vector<std::size_t> robots;
    bool enabled = true;
  };
  std::vector<OutputSlot> outputs;
  for (std::size_t i = 0; i < robots_.size(); ++i) {
    for (const auto& o : robots_[i]->spec.outputs) {
      auto it = std::find_if(outputs.begin(), outputs.end(), [&](const OutputSlot& s) { return s.system == o; });
      if (it == outputs.end()) {
        outputs.push_back(OutputSlot{o, {i}, true});
      } else {
        it->robots.push_back(i);
      }
    }
  }
  std::vector<std::string> output_errors;
  std::mutex output_errors_mu;
  for (auto& slot : outputs) {
    std::vector<RobotInfo> attached;
    for (auto i : slot.robots) attached.push_back(infos[i]);
    try {
      slot.system->setup(attached);
    } catch (const std::exception& e) {
      slot.enabled = false;
      output_errors.push_back(slot.system->name() + ": " + e.what());
    }
  }
  Mailbox<std::optional<std::shared_ptr<const StepSnapshot>>> output_queue;
  std::thread output_worker([&] {
    for (;;) {
      auto item = output_queue.pop();
      if (!item) break;
      const StepSnapshot& snap = **item;
      for (auto& slot : outputs) {
        if (!slot.enabled) continue;
        StepSnapshot part{snap.k, snap.t, {}};
        for (auto i : slot.robots) part.robots.push_back(snap.robots[i]);
        try {
          slot.system->consume(part);
        } catch (const std::exception& e) {
          slot.enabled = false;
          std::lock_guard lock(output_errors_mu);
          output_errors.push_back(slot.system->name() + ": " + e.what());
        }
      }
    }
  });

  const bool paced = options_.realtime_factor > 0;
  const auto deadline = std::chrono::duration<double>(dt * std::max(1.0, options_.realtime_factor));
  const auto loop_start = SteadyClock::now();
  auto last_step_start = loop_start;
  std::int64_t k = 0;
  std::int64_t last_progress_second = 0;

  while (k < k_max && !stop_requested_.load()) {
    ++k;
    const double t = step_time(k, dt);
    const auto step_start = SteadyClock::now();
    if (k > 1) report.step_periods.push_back(std::chrono::duration<double>(step_start - last_step_start).count());
    last_step_start = step_start;
    jobs_->set_now(t);

    // (1) inputs
    if (trace) trace(k, Phase::input, "");
    for (auto& rp : robots_) {
      Robot& r = *rp;
      std::optional<DefRecord> next;
      try {
        if (r.pending_override) {
          next = std::move(r.pending_override);
          r.pending_override.reset();
        } else if (r.spec.input) {
          next = r.spec.input->sample(t, r.info);
        } else {
          for (auto& in : system_inputs_) {
            if ((next = in->sample(t, r.info))) break;
          }
        }
        if (next) {
          const auto& schema = r.info.definition.input_schema();
          r.input = next->schema() == schema ? next->with_timestamp(t) : project(*next, schema).with_timestamp(t);
        }
      } catch (const std::exception& e) {
        std::lock_guard lock(output_errors_mu);
        output_errors.push_back("input for " + r.info.id + " at t=" + format_number(t) + ": " + e.what());
      }
    }

    // (2)-(3) robots step in parallel; gather within the deadline.
    for (auto& r : robots_) {
      if (!r->failed) r->commands.push(StepCommand{k, t, r->input, false});
    }
    const auto gather_deadline = SteadyClock::now() + std::chrono::duration_cast<SteadyClock::duration>(deadline);
    for (auto& rp : robots_) {
      Robot& r = *rp;
      if (r.failed) {
        r.mark(t, dt, true);
        continue;
      }
      std::optional<StepResult> res;
      for (;;) {
        if (paced) {
          const auto left = gather_deadline - SteadyClock::now();
          res = r.results.pop_for(std::max(left, SteadyClock::duration::zero()));
        } else {
          res = r.results.pop();
        }
        if (!res || res->k == k) break;  // older results arrive late and are dropped
      }
      if (!res) {
        r.mark(t, dt, true);  // missed the deadline: hold the last snapshot
        continue;
      }
      if (res->error) {
        r.failed = true;
        r.error = res->error;
        r.mark(t, dt, true);
        continue;
      }
      r.state = std::move(res->state);
      r.output = std::move(res->output);
      r.mark(t, dt, res->stale);
    }

    auto snapshot = std::make_shared<StepSnapshot>();
    snapshot->k = k;
    snapshot->t = t;
    for (auto& r : robots_) {
      snapshot->robots.push_back(RobotSnapshot{r->info.id, r->input, r->state.with_stale(r->stale),
                                               r->output.with_stale(r->stale), r->stale});
    }

    // (4) process systems; overrides land on the next step.
    if (trace) trace(k, Phase::process, "");
    for (auto& p : processes_) {
      try {
        for (auto& ov : p->process(*snapshot, *jobs_)) {
          auto it = std::find_if(robots_.begin(), robots_.end(),
                                 [&](const auto& r) { return r->info.id == ov.robot_id; });
          if (it == robots_.end()) {
            throw Error(ErrorKind::unknown_key, "input override for unknown robot '" + ov.robot_id + "'");
          }
          (*it)->pending_override = std::move(ov.input);
        }
      } catch (const std::exception& e) {
        std::lock_guard lock(output_errors_mu);
        output_errors.push_back("process system at t=" + format_number(t) + ": " + e.what());
      }
    }

    // (5) outputs run on their own worker, in step order.
    if (trace) trace(k, Phase::output, "");
    output_queue.push(std::shared_ptr<const StepSnapshot>(snapshot));

    // (6) callbacks of jobs that finished before this boundary.
    if (trace) trace(k, Phase::callbacks, "");
    jobs_->deliver_completed();

    if (options_.progress) {
      const auto second = static_cast<std::int64_t>(std::floor(t + 1e-9));
      if (second > last_progress_second || k == k_max) {
        last_progress_second = second;
        int stale = 0;
        for (auto& r : robots_) stale += r->stale ? 1 : 0;
        std::fprintf(stderr, "t=%.2f/%.2f s  step %lld/%lld  stale robots: %d\n", t, step_time(k_max, dt),
                     static_cast<long long>(k), static_cast<long long>(k_max), stale);
      }
    }

    if (paced) {
      const auto due = loop_start + std::chrono::duration_cast<SteadyClock::duration>(
                                        std::chrono::duration<double>(t / options_.realtime_factor));
      std::this_thread::sleep_until(due);
    }
  }

  // Outstanding jobs finish and report at a final boundary.
  jobs_->wait_idle();
  if (trace) trace(k, Phase::callbacks, "");
  jobs_->deliver_completed();

  stop_workers();
  output_queue.push(std::nullopt);
  output_worker.join();
  for (auto& slot : outputs) {
    try {
      for (auto& f : slot.system->finalize()) report.files.push_back(std::move(f));
    } catch (const std::exception& e) {
      output_errors.push_back(slot.system->name() + ": " + e.what());
    }
  }

  report.steps = k;
  report.final_t = step_time(k, dt);
  report.interrupted = k < k_max;
  report.output_errors = std::move(output_errors);
  report.jobs = jobs_->summary();
  for (auto& r : robots_) {
    report.robots.push_back(RobotReport{r->info.id, r->info.definition.name(), r->info.implementation, r->stale,
                                        r->stale_intervals, r->error});
  }
  report.wall_time = std::chrono::duration<double>(SteadyClock::now() - wall_start).count();

  if (!options_.out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(options_.out_dir, ec);
    const auto path = options_.out_dir / "run_report.json";
    std::ofstream out(path);
    if (out) {
      report.files.push_back(path.string());
      out << report.to_json() << "\n";
    } else {
      report.output_errors.push_back("cannot write " + path.string());
    }
  }
  return report;
}

}  // namespace rems
