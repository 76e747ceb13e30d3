#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <random>

#include "rems/backends/analytical.hpp"
#include "rems/backends/device_profile.hpp"

namespace rems {

/// Emulated hardware: commands travel through the device's native unit,
/// deadband, quantization, range and latency, and take effect only at device
/// ticks. Wheeled definitions only.
class EmulatedBackend final : public Backend {
 public:
  explicit EmulatedBackend(DeviceProfile profile);

  std::string name() const override { return "emulated:" + profile_.name; }
  void check_compatible(const RobotDefinition& def) const override;
  void init(const RobotDefinition& def, double t0, const BackendContext& ctx) override;
  void drive(const DefRecord& input, double t) override;
  DefRecord sense() override;
  DefRecord observe_state() override;
  void close() override;
  double device_timestep() const override { return 1.0 / profile_.device_rate; }

  const DeviceProfile& profile() const noexcept { return profile_; }
  /// The native command currently held by the device.
  const DefRecord& effective_command() const;
  /// How many ticks changed the held command.
  std::int64_t command_changes() const noexcept { return changes_; }
  /// Converts and shapes a definition-level input the way drive does, without
  /// queueing it.
  DefRecord native_command(const DefRecord& input) const;

 private:
  struct Pending {
    double effective_at;
    DefRecord command;
  };

  void require_init() const;

  DeviceProfile profile_;
  std::optional<RobotDefinition> def_;
  ActuatorMaps maps_;
  MotionState motion_;
  std::deque<Pending> queue_;
  std::optional<DefRecord> held_;
  std::optional<DefRecord> reading_;
  bool reading_due_ = true;
  std::mt19937_64 rng_;
  double t_last_ = 0.0;
  double dt_ = 0.01;
  std::int64_t changes_ = 0;
};

}  // namespace rems
