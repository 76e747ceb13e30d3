#include "rems/backends/analytical.hpp"

#include <array>

namespace rems {

std::uint64_t derive_seed(std::uint64_t seed, std::string_view robot_id, std::string_view stream) noexcept {
  // FNV-1a over the names, then a splitmix64 finalizer mixed with the seed.
  std::uint64_t h = 1469598103934665603ULL;
  auto feed = [&](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= 0xff;
    h *= 1099511628211ULL;
  };
  feed(robot_id);
  feed(stream);
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL + h;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

MotionState::MotionState(const RobotDefinition& def, Integrator method)
    : method_(method), parts_(def.initial_part_states()) {
  for (const auto& f : def.actuator_schema().fields()) {
    if (f.spec.dimension() == Dimension::angular_velocity) wheel_angles_.emplace_back(f.key, 0.0);
  }
}

void MotionState::advance(const std::vector<MotionCommand>& commands, double dt) {
  if (commands.size() != parts_.size()) throw Error(ErrorKind::schema_mismatch, "one command per part expected");
  for (std::size_t i = 0; i < parts_.size(); ++i) {
    if (const auto* twist = std::get_if<Twist2d>(&commands[i])) {
      auto& pose = std::get<Pose2d>(parts_[i]);
      if (dt > 0) pose = integrate_pose(pose, *twist, dt, method_);
    } else {
      parts_[i] = std::get<Eigen::VectorXd>(commands[i]);
    }
  }
}

void MotionState::advance_wheels(const DefRecord& actuators, double dt) {
  for (auto& [key, angle] : wheel_angles_) {
    if (actuators.schema().contains(key)) angle += get_value(actuators, key, "rad/s") * dt;
  }
}

void AnalyticalBackend::check_compatible(const RobotDefinition& def) const {
  if (def.empty()) throw Error(ErrorKind::schema_incompatible, "analytical backend needs a non-empty definition");
}

void AnalyticalBackend::init(const RobotDefinition& def, double t0, const BackendContext&) {
  check_compatible(def);
  def_ = def;
  motion_ = MotionState(def, method_);
  t_last_ = t0;
}

void AnalyticalBackend::require_init() const {
  if (!def_) throw Error(ErrorKind::not_initialized, "analytical backend is not initialized");
}

void AnalyticalBackend::drive(const DefRecord& input, double t) {
  require_init();
  if (input.schema() != def_->input_schema()) {
    throw Error(ErrorKind::schema_mismatch, "drive input does not match the definition's input schema");
  }
  const double dt = t - t_last_;
  motion_.advance(def_->drive_map(input), dt);
  if (dt > 0) motion_.advance_wheels(expand_wheel_links(input, def_->wheel_links()), dt);
  t_last_ = t;
}

DefRecord AnalyticalBackend::sense() {
  require_init();
  return def_->sense_map(observe_state()).with_timestamp(t_last_);
}

DefRecord AnalyticalBackend::observe_state() {
  require_init();
  return def_->state_record(motion_.parts()).with_timestamp(t_last_);
}

void AnalyticalBackend::close() { def_.reset(); }

const MotionState& AnalyticalBackend::motion() const {
  require_init();
  return motion_;
}

}  // namespace rems
