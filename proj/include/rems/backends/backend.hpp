#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "rems/defrecord/record.hpp"
#include "rems/robotdefs/definition.hpp"

namespace rems {

/// Per-robot facts a backend may need at init.
struct BackendContext {
  std::string robot_id;
  std::uint64_t seed = 0;
  double system_dt = 0.01;
};

/// A concrete realization of a definition. One instance belongs to one robot
/// worker; no method is called concurrently.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual std::string name() const = 0;
  /// Throws SchemaIncompatible when this backend cannot realize `def`.
  virtual void check_compatible(const RobotDefinition& def) const = 0;
  virtual void init(const RobotDefinition& def, double t0, const BackendContext& ctx) = 0;
  /// Applies `input` over (t_last, t].
  virtual void drive(const DefRecord& input, double t) = 0;
  virtual DefRecord sense() = 0;
  virtual DefRecord observe_state() = 0;
  virtual void close() = 0;
  /// Internal update period in seconds; 0 means continuous.
  virtual double device_timestep() const = 0;
};

using BackendPtr = std::unique_ptr<Backend>;

/// Seeds a generator from the run seed and a robot-scoped stream name so
/// every robot draws an independent, reproducible sequence.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view robot_id, std::string_view stream) noexcept;

}  // namespace rems
