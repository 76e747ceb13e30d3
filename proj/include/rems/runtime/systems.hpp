#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rems/defrecord/record.hpp"
#include "rems/robotdefs/definition.hpp"

namespace rems {

class JobPool;

struct RobotInfo {
  std::string id;
  RobotDefinition definition;
  std::string implementation;
};

struct RobotSnapshot {
  std::string id;
  DefRecord input;
  DefRecord state;
  DefRecord output;
  bool stale = false;
};

/// Everything observed at one system step, in robot registration order.
struct StepSnapshot {
  std::int64_t k = 0;
  double t = 0.0;
  std::vector<RobotSnapshot> robots;
};

/// Produces robot inputs. Sampled on the orchestrator once per step.
class InputSystem {
 public:
  virtual ~InputSystem() = default;
  virtual void setup(const std::vector<RobotInfo>& /*robots*/) {}
  /// A record over the robot's input schema, or nullopt to leave the robot's
  /// previous input in place.
  virtual std::optional<DefRecord> sample(double t, const RobotInfo& robot) = 0;
};

/// Consumes step snapshots on the output worker, in step order.
class OutputSystem {
 public:
  virtual ~OutputSystem() = default;
  virtual std::string name() const = 0;
  virtual void setup(const std::vector<RobotInfo>& /*robots*/) {}
  /// Snapshot restricted to the robots attached to this system. Throwing
  /// disables this system for the rest of the run.
  virtual void consume(const StepSnapshot& snapshot) = 0;
  /// Flushes; returns the files written.
  virtual std::vector<std::string> finalize() { return {}; }
};

struct InputOverride {
  std::string robot_id;
  DefRecord input;
};

/// User code called once per step after every robot has stepped. Overrides
/// take effect on the next step.
class ProcessSystem {
 public:
  virtual ~ProcessSystem() = default;
  virtual void setup(const std::vector<RobotInfo>& /*robots*/, JobPool& /*jobs*/) {}
  virtual std::vector<InputOverride> process(const StepSnapshot& snapshot, JobPool& jobs) = 0;
};

}  // namespace rems
