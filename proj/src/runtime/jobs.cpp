#include "rems/runtime/jobs.hpp"

#include <exception>

#include "rems/error.hpp"

namespace rems {

std::string_view to_string(JobState s) noexcept {
  switch (s) {
    case JobState::pending: return "pending";
    case JobState::running: return "running";
    case JobState::done: return "done";
    case JobState::failed: return "failed";
  }
  return "?";
}

JobPool::JobPool(std::size_t threads) {
  if (threads == 0) threads = 1;
  for (std::size_t i = 0; i < threads; ++i) threads_.emplace_back([this] { worker(); });
}

JobPool::~JobPool() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  for (auto& t : threads_) t.join();
}

JobHandle JobPool::submit(std::string name, JobWork work, JobCallback on_done) {
  std::lock_guard lock(mu_);
  const std::uint64_t id = states_.size() + 1;
  states_.push_back(JobState::pending);
  queue_.push_back(Job{id, std::move(name), std::move(work), std::move(on_done), now_.load()});
  ++summary_.submitted;
  cv_.notify_one();
  return {id};
}

JobState JobPool::state(JobHandle h) const {
  std::lock_guard lock(mu_);
  if (h.id == 0 || h.id > states_.size()) throw Error(ErrorKind::invalid_argument, "unknown job id");
  return states_[h.id - 1];
}

void JobPool::worker() {
  for (;;) {
    Job job;
    {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      if (queue_.empty()) return;
      job = std::move(queue_.front());
      queue_.pop_front();
      states_[job.id - 1] = JobState::running;
      ++running_;
    }
    JobOutcome out;
    out.id = job.id;
    out.name = job.name;
    out.submitted_at = job.submitted_at;
    try {
      out.result = job.work();
      out.state = JobState::done;
    } catch (const std::exception& e) {
      out.state = JobState::failed;
      out.error = e.what();
    } catch (...) {
      out.state = JobState::failed;
      out.error = "unknown exception";
    }
    {
      std::lock_guard lock(mu_);
      out.completion_seq = ++completion_seq_;
      states_[job.id - 1] = out.state;
      ++(out.state == JobState::done ? summary_.done : summary_.failed);
      finished_.push_back(Finished{std::move(out), std::move(job.on_done)});
      --running_;
    }
    idle_cv_.notify_all();
  }
}

std::size_t JobPool::deliver_completed() {
  std::deque<Finished> ready;
  {
    std::lock_guard lock(mu_);
    ready.swap(finished_);
  }
  for (auto& f : ready) {
    if (f.on_done) f.on_done(f.outcome);
  }
  std::lock_guard lock(mu_);
  summary_.delivered += static_cast<std::int64_t>(ready.size());
  return ready.size();
}

void JobPool::wait_idle() {
  std::unique_lock lock(mu_);
  idle_cv_.wait(lock, [&] { return queue_.empty() && running_ == 0; });
}

std::size_t JobPool::outstanding() const {
  std::lock_guard lock(mu_);
  return queue_.size() + running_;
}

JobSummary JobPool::summary() const {
  std::lock_guard lock(mu_);
  return summary_;
}

}  // namespace rems
