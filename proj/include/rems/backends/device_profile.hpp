#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "rems/defrecord/units.hpp"

namespace rems {

/// Native-unit quirks of an actuator/sensor device family.
struct DeviceProfile {
  std::string name;
  UnitSpec native_input{"rad/s"};
  double device_rate = 1000.0;  // Hz
  double command_latency = 0.0;  // s
  double quantization = 0.0;     // native units, 0 = continuous
  double deadband = 0.0;         // native units around zero
  double noise_std = 0.0;        // sensor units
  std::string sensor_unit = "m";  // unit of range readings and their noise

  /// Throws InvalidArgument when a field is out of its domain.
  void validate() const;
  /// Deadband, then round half-to-even onto the quantization grid, then clamp
  /// to the native range.
  double shape_command(double native_value) const noexcept;
};

/// webots (rad/s, 1 kHz), dynabot (rpm, 100 Hz), woodbot (duty, 5 Hz,
/// deadband 0.05), create2 (count +-500, 20 Hz).
std::vector<std::string> builtin_profile_names();
/// Throws UnknownProfile listing the valid names.
DeviceProfile builtin_profile(std::string_view name);

}  // namespace rems
