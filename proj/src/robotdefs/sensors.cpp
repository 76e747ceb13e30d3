#include "rems/robotdefs/sensors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rems {

ArenaSpec::ArenaSpec(double xmin, double xmax, double ymin, double ymax)
    : xmin_(xmin), xmax_(xmax), ymin_(ymin), ymax_(ymax) {
  if (!(xmin < xmax) || !(ymin < ymax)) {
    throw Error(ErrorKind::invalid_argument, "arena needs xmin < xmax and ymin < ymax");
  }
}

bool ArenaSpec::contains(double x, double y) const noexcept {
  return x >= xmin_ && x <= xmax_ && y >= ymin_ && y <= ymax_;
}

std::vector<double> range_sensor_model(const Pose2d& pose, const std::vector<RangeMount>& mounts,
                                       const ArenaSpec& arena, double max_range) {
  if (!arena.contains(pose.x, pose.y)) {
    throw Error(ErrorKind::outside_arena, "pose (" + std::to_string(pose.x) + ", " + std::to_string(pose.y) +
                                              ") is outside the arena");
  }
  std::vector<double> out;
  out.reserve(mounts.size());
  const double c = std::cos(pose.theta);
  const double s = std::sin(pose.theta);
  for (const auto& m : mounts) {
    const double ox = pose.x + c * m.offset.x - s * m.offset.y;
    const double oy = pose.y + s * m.offset.x + c * m.offset.y;
    if (!arena.contains(ox, oy)) {
      out.push_back(0.0);
      continue;
    }
    const double heading = pose.theta + m.offset.theta;
    const double dx = std::cos(heading);
    const double dy = std::sin(heading);
    double hit = std::numeric_limits<double>::infinity();
    if (dx > 0) hit = std::min(hit, (arena.xmax() - ox) / dx);
    if (dx < 0) hit = std::min(hit, (arena.xmin() - ox) / dx);
    if (dy > 0) hit = std::min(hit, (arena.ymax() - oy) / dy);
    if (dy < 0) hit = std::min(hit, (arena.ymin() - oy) / dy);
    out.push_back(std::min(hit, max_range));
  }
  return out;
}

}  // namespace rems
