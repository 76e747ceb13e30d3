#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rems/defrecord/record.hpp"
#include "rems/robotdefs/definition.hpp"
#include "rems/runtime/systems.hpp"

namespace rems {

/// Timed input samples with zero-order hold. The CSV shape is the log shape:
/// `t,key[unit],...` with an optional trailing `stale` column, so an input
/// log replays as-is.
struct Trajectory {
  Schema schema;
  std::vector<double> times;
  std::vector<std::vector<double>> rows;  // schema order

  std::size_t size() const noexcept { return times.size(); }
};

/// Throws ParseError (message carries `source:line`), NonMonotoneTime.
Trajectory parse_trajectory(std::string_view csv, std::string_view source = "<memory>");
/// Also throws IoError.
Trajectory load_trajectory(const std::filesystem::path& path);

/// Last sample at or before t; zeros before the first; the last one holds.
/// Throws InvalidArgument for negative t.
DefRecord sample(const Trajectory& traj, double t);

/// Every trajectory key must be an input key of the same dimension. Keys the
/// trajectory lacks keep their defaults. Throws SchemaMismatch.
void check_trajectory(const Trajectory& traj, const RobotDefinition& def);

/// Feeds one trajectory to every robot it is attached to.
class TrajectoryInput final : public InputSystem {
 public:
  explicit TrajectoryInput(Trajectory traj) : traj_(std::move(traj)) {}
  void setup(const std::vector<RobotInfo>& robots) override;
  std::optional<DefRecord> sample(double t, const RobotInfo& robot) override;
  const Trajectory& trajectory() const noexcept { return traj_; }

 private:
  Trajectory traj_;
};

}  // namespace rems
