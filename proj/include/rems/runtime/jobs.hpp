#pragma once

#include <any>
#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace rems {

enum class JobState { pending, running, done, failed };
std::string_view to_string(JobState s) noexcept;

struct JobOutcome {
  std::uint64_t id = 0;
  std::string name;
  JobState state = JobState::pending;
  std::any result;
  std::string error;
  double submitted_at = 0.0;       // simulated time
  std::uint64_t completion_seq = 0;  // order of completion across the pool
};

using JobWork = std::function<std::any()>;
using JobCallback = std::function<void(const JobOutcome&)>;

struct JobHandle {
  std::uint64_t id = 0;
};

struct JobSummary {
  std::int64_t submitted = 0;
  std::int64_t done = 0;
  std::int64_t failed = 0;
  std::int64_t delivered = 0;
};

/// Bounded thread pool for background work. Callbacks never run on pool
/// threads: they are queued in completion order and handed out by
/// deliver_completed(), which the orchestrator calls at step boundaries.
class JobPool {
 public:
  explicit JobPool(std::size_t threads = 2);
  ~JobPool();
  JobPool(const JobPool&) = delete;
  JobPool& operator=(const JobPool&) = delete;

  JobHandle submit(std::string name, JobWork work, JobCallback on_done);
  JobState state(JobHandle h) const;

  /// Runs the callbacks of every job finished so far, in completion order.
  /// Returns how many were delivered.
  std::size_t deliver_completed();
  /// Blocks until no job is pending or running.
  void wait_idle();
  std::size_t outstanding() const;
  JobSummary summary() const;

  /// Simulated time stamped onto newly submitted jobs.
  void set_now(double t) noexcept { now_ = t; }

 private:
  struct Job {
    std::uint64_t id;
    std::string name;
    JobWork work;
    JobCallback on_done;
    double submitted_at;
  };
  struct Finished {
    JobOutcome outcome;
    JobCallback on_done;
  };

  void worker();

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable idle_cv_;
  std::deque<Job> queue_;
  std::deque<Finished> finished_;
  std::vector<JobState> states_;  // index = id - 1
  std::size_t running_ = 0;
  bool stopping_ = false;
  std::uint64_t completion_seq_ = 0;
  JobSummary summary_;
  std::atomic<double> now_{0.0};
  std::vector<std::thread> threads_;
};

}  // namespace rems
