#pragma once

#include <cmath>
#include <cstdint>

#include "rems/error.hpp"

namespace rems {

/// Number of system steps in a run: round(duration / dt), halves rounding up.
inline std::int64_t step_count(double duration, double dt) {
  if (!(dt > 0) || !(duration > 0)) throw Error(ErrorKind::invalid_argument, "duration and dt must be positive");
  return static_cast<std::int64_t>(std::floor(duration / dt + 0.5));
}

/// Time of step k. Computed from k, never accumulated.
inline double step_time(std::int64_t k, double dt) noexcept { return static_cast<double>(k) * dt; }

/// True when a device running at `rate` Hz ticks during step k of a loop
/// with period dt. A device at least as fast as the loop fires every step,
/// never more than once.
inline bool device_due(std::int64_t k, double dt, double rate) {
  if (!(rate > 0) || !(dt > 0)) throw Error(ErrorKind::invalid_argument, "device rate and dt must be positive");
  if (rate * dt >= 1.0 - 1e-12) return true;
  // The small bias keeps k*dt*rate landing exactly on an integer from
  // rounding down (0.2 * 5 = 0.9999... in binary).
  const auto ticks = [&](std::int64_t i) { return std::floor(static_cast<double>(i) * dt * rate + 1e-9); };
  return ticks(k) > ticks(k - 1);
}

/// Shared discrete clock: t_k = k * dt.
class Clock {
 public:
  explicit Clock(double dt) : dt_(dt) {
    if (!(dt > 0)) throw Error(ErrorKind::invalid_argument, "dt must be positive");
  }
  double dt() const noexcept { return dt_; }
  std::int64_t k() const noexcept { return k_; }
  double t() const noexcept { return step_time(k_, dt_); }
  double advance() noexcept { return step_time(++k_, dt_); }

 private:
  double dt_;
  std::int64_t k_ = 0;
};

}  // namespace rems
