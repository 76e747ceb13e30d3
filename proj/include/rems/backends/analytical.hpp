#pragma once

#include <optional>
#include <vector>

#include "rems/backends/backend.hpp"

namespace rems {

/// Ground-truth motion of every part of a definition under held commands.
class MotionState {
 public:
  MotionState() = default;
  MotionState(const RobotDefinition& def, Integrator method);

  /// Holds `commands` over `dt` seconds. Arms jump to their joint targets.
  void advance(const std::vector<MotionCommand>& commands, double dt);
  /// Accumulates wheel angles from a record over the actuator schema.
  void advance_wheels(const DefRecord& actuators, double dt);

  const std::vector<PartState>& parts() const noexcept { return parts_; }
  /// Accumulated wheel angle (rad) per actuator key.
  const std::vector<std::pair<std::string, double>>& wheel_angles() const noexcept { return wheel_angles_; }

 private:
  Integrator method_ = Integrator::exact;
  std::vector<PartState> parts_;
  std::vector<std::pair<std::string, double>> wheel_angles_;
};

/// The definition's kinematic model, integrated exactly.
class AnalyticalBackend final : public Backend {
 public:
  explicit AnalyticalBackend(Integrator method = Integrator::exact) : method_(method) {}

  std::string name() const override { return "analytical"; }
  void check_compatible(const RobotDefinition& def) const override;
  void init(const RobotDefinition& def, double t0, const BackendContext& ctx) override;
  void drive(const DefRecord& input, double t) override;
  DefRecord sense() override;
  DefRecord observe_state() override;
  void close() override;
  double device_timestep() const override { return 0.0; }

  const MotionState& motion() const;

 private:
  void require_init() const;

  Integrator method_;
  std::optional<RobotDefinition> def_;
  MotionState motion_;
  double t_last_ = 0.0;
};

}  // namespace rems
