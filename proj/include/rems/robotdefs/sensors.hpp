#pragma once

#include <string>
#include <vector>

#include "rems/robotdefs/kinematics.hpp"

namespace rems {

/// Axis-aligned rectangular arena bounded by walls.
class ArenaSpec {
 public:
  ArenaSpec(double xmin, double xmax, double ymin, double ymax);

  double xmin() const noexcept { return xmin_; }
  double xmax() const noexcept { return xmax_; }
  double ymin() const noexcept { return ymin_; }
  double ymax() const noexcept { return ymax_; }
  bool contains(double x, double y) const noexcept;

 private:
  double xmin_, xmax_, ymin_, ymax_;
};

/// A range sensor fixed to the body; `offset` is its pose in the body frame.
struct RangeMount {
  std::string name;
  Pose2d offset;
};

/// Distance along each mount's heading to the first wall, capped at
/// `max_range`. Throws OutsideArena when the robot pose is outside.
std::vector<double> range_sensor_model(const Pose2d& pose, const std::vector<RangeMount>& mounts,
                                       const ArenaSpec& arena, double max_range);

}  // namespace rems
