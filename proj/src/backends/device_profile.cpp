#include "rems/backends/device_profile.hpp"

#include <cmath>

#include "rems/error.hpp"

namespace rems {

void DeviceProfile::validate() const {
  auto bad = [&](const std::string& what) {
    throw Error(ErrorKind::invalid_argument, "device profile '" + name + "': " + what);
  };
  if (!(device_rate > 0) || !std::isfinite(device_rate)) bad("device_rate must be positive");
  if (!(quantization >= 0)) bad("quantization must be >= 0");
  if (!(command_latency >= 0)) bad("command_latency must be >= 0");
  if (!(deadband >= 0)) bad("deadband must be >= 0");
  if (!(noise_std >= 0)) bad("noise_std must be >= 0");
  const auto dim = native_input.dimension();
  if (dim != Dimension::angular_velocity && dim != Dimension::duty && dim != Dimension::count) {
    bad("native input unit must be an angular velocity, duty or count");
  }
  if (UnitSpec(sensor_unit).dimension() != Dimension::length) bad("sensor_unit must be a length");
}

double DeviceProfile::shape_command(double v) const noexcept {
  if (std::abs(v) < deadband) v = 0.0;
  // nearbyint honours the default FE_TONEAREST mode: ties go to even.
  if (quantization > 0) v = std::nearbyint(v / quantization) * quantization;
  if (const auto& r = native_input.range()) v = r->clamp(v);
  return v == 0.0 ? 0.0 : v;
}

std::vector<std::string> builtin_profile_names() { return {"webots", "dynabot", "woodbot", "create2"}; }

DeviceProfile builtin_profile(std::string_view name) {
  DeviceProfile p;
  p.name = std::string(name);
  if (name == "webots") {
    p.native_input = UnitSpec("rad/s");
    p.device_rate = 1000.0;
  } else if (name == "dynabot") {
    p.native_input = UnitSpec("rpm");
    p.device_rate = 100.0;
    p.quantization = 1.0;
  } else if (name == "woodbot") {
    p.native_input = UnitSpec("duty").with_range(-1.0, 1.0);
    p.device_rate = 5.0;
    p.quantization = 1.0 / 255.0;  // 8-bit PWM
    p.deadband = 0.05;
  } else if (name == "create2") {
    p.native_input = UnitSpec("count").with_range(-500.0, 500.0);
    p.device_rate = 20.0;
    p.quantization = 1.0;
    p.sensor_unit = "mm";
  } else {
    std::string msg = "unknown device profile '" + std::string(name) + "'; built-ins:";
    for (const auto& n : builtin_profile_names()) msg += " " + n;
    throw Error(ErrorKind::unknown_profile, msg);
  }
  return p;
}

}  // namespace rems
