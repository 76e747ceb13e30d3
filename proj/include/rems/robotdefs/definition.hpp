#pragma once

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rems/defrecord/mapping.hpp"
#include "rems/defrecord/record.hpp"
#include "rems/robotdefs/arm.hpp"
#include "rems/robotdefs/kinematics.hpp"
#include "rems/robotdefs/sensors.hpp"

namespace rems {

enum class Space { input, state, output };
std::string_view to_string(Space s) noexcept;

struct DiffDriveKinematics {
  DiffDriveParams<double> params;
  std::string left_key = "wh.l";
  std::string right_key = "wh.r";
};

struct MecanumKinematics {
  MecanumParams<double> params;
  std::array<std::string, 4> wheel_keys{"wh.fl", "wh.fr", "wh.rl", "wh.rr"};
};

/// Position-commanded serial arm: inputs joint.q1..qN (rad).
struct ArmKinematics {
  ArmParamsd params;
};

struct BaseSensors {
  std::vector<RangeMount> mounts;
  ArenaSpec arena{-10.0, 10.0, -10.0, 10.0};
  double max_range = 4.0;
};

/// One kinematic unit of a definition (a base or an arm) with the keys it owns
/// in each space. A merged definition is a list of parts.
struct DefinitionPart {
  std::string label;
  std::variant<DiffDriveKinematics, MecanumKinematics, ArmKinematics> kinematics;
  double max_wheel_speed = 0.0;  // rad/s, wheeled parts only
  std::optional<BaseSensors> sensors;
  Schema input;
  Schema state;
  Schema output;

  bool is_wheeled() const noexcept { return !std::holds_alternative<ArmKinematics>(kinematics); }
  /// Wheel input keys in kinematic order (empty for arms).
  std::vector<std::string> wheel_keys() const;
};

DefinitionPart diffdrive_part(std::string label, DiffDriveParams<double> params, double max_wheel_speed,
                              std::optional<BaseSensors> sensors = std::nullopt);
DefinitionPart mecanum_part(std::string label, MecanumParams<double> params, double max_wheel_speed,
                            std::optional<BaseSensors> sensors = std::nullopt);
DefinitionPart arm_part(std::string label, ArmParamsd params);

/// Body twist for bases, joint targets for arms; one per part.
using MotionCommand = std::variant<Twist2d, Eigen::VectorXd>;
/// Pose for bases, joint angles for arms; one per part.
using PartState = std::variant<Pose2d, Eigen::VectorXd>;

/// slave_i = gains_i * master. Slaves never act as masters.
struct WheelLinkRule {
  std::string master;
  std::vector<std::string> slaves;
  std::vector<double> gains;
};

/// Rules that carry definition-unit actuator commands into a device's native
/// unit and back.
struct ActuatorMaps {
  Schema native;
  std::vector<MappingRule> to_native;
  std::vector<MappingRule> from_native;
};

/// Behaviours a definition may override on whatever implementation it is
/// composed with.
struct DefinitionOverrides {
  std::function<DefRecord(const DefRecord& state, const DefRecord& implementation_output)> sense;
};

class RobotDefinition {
 public:
  RobotDefinition() = default;
  RobotDefinition(std::string name, std::vector<DefinitionPart> parts, std::vector<WheelLinkRule> links = {},
                  std::vector<MappingRule> input_rules = {});

  const std::string& name() const noexcept { return name_; }
  const std::vector<DefinitionPart>& parts() const noexcept { return parts_; }
  const std::vector<WheelLinkRule>& wheel_links() const noexcept { return links_; }
  const std::vector<MappingRule>& input_rules() const noexcept { return rules_; }
  const DefinitionOverrides& overrides() const noexcept { return overrides_; }

  const Schema& input_schema() const noexcept { return input_; }
  const Schema& state_schema() const noexcept { return state_; }
  const Schema& output_schema() const noexcept { return output_; }
  const Schema& schema(Space s) const noexcept;
  /// Input keys plus every wheel-link slave, in that order.
  const Schema& actuator_schema() const noexcept { return actuators_; }

  bool has_arm() const noexcept;
  bool empty() const noexcept { return parts_.empty(); }

  RobotDefinition renamed(std::string name) const;
  RobotDefinition with_overrides(DefinitionOverrides overrides) const;
  /// Replaces one field's unit spec (same dimension) in the given space.
  RobotDefinition with_field(Space space, std::string_view key, const UnitSpec& spec) const;
  RobotDefinition with_wheel_links(std::vector<WheelLinkRule> links) const;
  RobotDefinition with_input_rules(std::vector<MappingRule> rules) const;

  std::vector<MotionCommand> drive_map(const DefRecord& input) const;
  DefRecord sense_map(const DefRecord& state) const;

  std::vector<PartState> initial_part_states() const;
  DefRecord state_record(std::span<const PartState> states) const;
  std::vector<PartState> part_states(const DefRecord& state) const;

  /// Throws SchemaIncompatible for arms or non-actuator native dimensions.
  ActuatorMaps actuator_maps(const UnitSpec& native) const;
  /// Saturating rules from a teleop schema (fwd, turn, strafe in [-1, 1]) to
  /// wheel inputs at max_wheel_speed.
  std::vector<MappingRule> teleop_rules(const Schema& teleop) const;

 private:
  void rebuild();

  std::string name_;
  std::vector<DefinitionPart> parts_;
  std::vector<WheelLinkRule> links_;
  std::vector<MappingRule> rules_;
  DefinitionOverrides overrides_;
  Schema input_, state_, output_, actuators_;
};

/// Parts, schemas and rules of `a` then `b`. Throws KeyCollision listing every
/// conflicting key in every space.
RobotDefinition merge_definitions(const RobotDefinition& a, const RobotDefinition& b);

/// Adds each slave (gain * master) after the masters. Throws UnknownKey.
DefRecord expand_wheel_links(const DefRecord& masters, std::span<const WheelLinkRule> rules);

}  // namespace rems
