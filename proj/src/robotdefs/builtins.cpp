#include "rems/robotdefs/builtins.hpp"

#include <algorithm>
#include <numbers>

namespace rems {
namespace {

constexpr double kHalfPi = std::numbers::pi / 2;

BaseSensors sensors(std::vector<RangeMount> mounts, double max_range) {
  BaseSensors s;
  s.mounts = std::move(mounts);
  s.max_range = max_range;
  return s;
}

RobotDefinition two_wheeled(std::string name, double r, double d, double max_speed, BaseSensors s) {
  return RobotDefinition(name, {diffdrive_part("base", DiffDriveParams<double>(r, d), max_speed, std::move(s))});
}

RobotDefinition make(std::string_view name) {
  if (name == "create2") {
    return two_wheeled("create2", 0.036, 0.235, 0.5 / 0.036,
                       sensors({{"front", {0.17, 0.0, 0.0}},
                                {"left", {0.12, 0.12, kHalfPi / 2}},
                                {"right", {0.12, -0.12, -kHalfPi / 2}}},
                               1.0));
  }
  if (name == "woodbot") {
    // Two lidars: one forward, one to the right.
    return two_wheeled("woodbot", 0.035, 0.09, 12.0,
                       sensors({{"front", {0.04, 0.0, 0.0}}, {"right", {0.0, -0.045, -kHalfPi}}}, 2.0));
  }
  if (name == "epuck") {
    return two_wheeled("epuck", 0.0205, 0.052, 6.28, sensors({{"front", {0.035, 0.0, 0.0}}}, 0.1));
  }
  if (name == "pioneer3dx") {
    return two_wheeled("pioneer3dx", 0.0975, 0.381, 12.0, sensors({{"front", {0.2, 0.0, 0.0}}}, 5.0));
  }
  if (name == "pioneer3at") {
    return two_wheeled("pioneer3at", 0.11, 0.4, 7.0, sensors({{"front", {0.25, 0.0, 0.0}}}, 5.0))
        .with_wheel_links({{"wh.l", {"wh.l2"}, {1.0}}, {"wh.r", {"wh.r2"}, {1.0}}});
  }
  if (name == "moose") {
    return two_wheeled("moose", 0.3, 1.2, 4.5, sensors({{"front", {0.8, 0.0, 0.0}}}, 8.0))
        .with_wheel_links({{"wh.l", {"wh.l2", "wh.l3", "wh.l4"}, {1.0, 1.0, 1.0}},
                           {"wh.r", {"wh.r2", "wh.r3", "wh.r4"}, {1.0, 1.0, 1.0}}});
  }
  if (name == "omnibase") {
    return RobotDefinition("omnibase", {mecanum_part("base", MecanumParams<double>(0.0475, 0.228, 0.158), 16.0,
                                                     sensors({{"front", {0.3, 0.0, 0.0}}}, 4.0))});
  }
  if (name == "arm5") {
    std::vector<ArmLink<double>> links(5);
    const Eigen::Vector3d z = Eigen::Vector3d::UnitZ();
    const Eigen::Vector3d y = Eigen::Vector3d::UnitY();
    links[0] = {z, {0.033, 0.0, 0.147}, Eigen::Quaterniond::Identity()};
    links[1] = {y, {0.0, 0.0, 0.155}, Eigen::Quaterniond::Identity()};
    links[2] = {y, {0.0, 0.0, 0.135}, Eigen::Quaterniond::Identity()};
    links[3] = {y, {0.0, 0.0, 0.081}, Eigen::Quaterniond::Identity()};
    links[4] = {z, {0.0, 0.0, 0.137}, Eigen::Quaterniond::Identity()};
    return RobotDefinition("arm5", {arm_part("arm", ArmParamsd(links))});
  }
  if (name == "omnibase+arm") {
    return merge_definitions(make("omnibase"), make("arm5")).renamed("omnibase+arm");
  }
  std::string msg = "unknown robot definition '" + std::string(name) + "'; built-ins:";
  for (const auto& n : builtin_definition_names()) msg += " " + n;
  throw Error(ErrorKind::unknown_key, msg);
}

}  // namespace

std::vector<std::string> builtin_definition_names() {
  return {"create2", "woodbot", "epuck", "pioneer3dx", "pioneer3at", "moose", "omnibase", "arm5", "omnibase+arm"};
}

bool is_builtin_definition(std::string_view name) {
  const auto names = builtin_definition_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

RobotDefinition builtin_definition(std::string_view name) { return make(name); }

}  // namespace rems
