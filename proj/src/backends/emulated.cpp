#include "rems/backends/emulated.hpp"

#include <algorithm>
#include <cmath>

#include "rems/runtime/clock.hpp"

namespace rems {

EmulatedBackend::EmulatedBackend(DeviceProfile profile) : profile_(std::move(profile)) { profile_.validate(); }

void EmulatedBackend::check_compatible(const RobotDefinition& def) const {
  if (def.empty()) throw Error(ErrorKind::schema_incompatible, "emulated backend needs a non-empty definition");
  (void)def.actuator_maps(profile_.native_input);
}

void EmulatedBackend::init(const RobotDefinition& def, double t0, const BackendContext& ctx) {
  maps_ = def.actuator_maps(profile_.native_input);
  def_ = def;
  motion_ = MotionState(def, Integrator::exact);
  queue_.clear();
  held_ = make_record(maps_.native);
  reading_.reset();
  reading_due_ = true;
  rng_.seed(derive_seed(ctx.seed, ctx.robot_id, "sense"));
  t_last_ = t0;
  dt_ = ctx.system_dt;
  changes_ = 0;
}

void EmulatedBackend::require_init() const {
  if (!def_) throw Error(ErrorKind::not_initialized, name() + " backend is not initialized");
}

DefRecord EmulatedBackend::native_command(const DefRecord& input) const {
  require_init();
  if (input.schema() != def_->input_schema()) {
    throw Error(ErrorKind::schema_mismatch, "drive input does not match the definition's input schema");
  }
  const auto actuators = expand_wheel_links(input, def_->wheel_links());
  auto native = bind_record(make_record(maps_.native), actuators, maps_.to_native);
  std::vector<double> shaped(native.values().begin(), native.values().end());
  for (auto& v : shaped) v = profile_.shape_command(v);
  return with_values(maps_.native, std::move(shaped));
}

void EmulatedBackend::drive(const DefRecord& input, double t) {
  auto cmd = native_command(input);
  queue_.push_back({t + profile_.command_latency, std::move(cmd)});

  const auto k = static_cast<std::int64_t>(std::llround(t / dt_));
  if (device_due(k, dt_, profile_.device_rate)) {
    std::optional<DefRecord> newest;
    while (!queue_.empty() && queue_.front().effective_at <= t + 1e-12) {
      newest = std::move(queue_.front().command);
      queue_.pop_front();
    }
    if (newest && !std::ranges::equal(newest->values(), held_->values())) {
      held_ = std::move(newest);
      ++changes_;
    }
    reading_due_ = true;
  }

  const auto actuators = bind_record(make_record(def_->actuator_schema()), *held_, maps_.from_native);
  const double dt = t - t_last_;
  motion_.advance(def_->drive_map(project(actuators, def_->input_schema())), dt);
  if (dt > 0) motion_.advance_wheels(actuators, dt);
  t_last_ = t;
}

DefRecord EmulatedBackend::sense() {
  require_init();
  if (reading_due_ || !reading_) {
    auto out = def_->sense_map(observe_state());
    if (profile_.noise_std > 0) {
      std::normal_distribution<double> noise(0.0, profile_.noise_std);
      std::vector<double> values(out.values().begin(), out.values().end());
      for (std::size_t i = 0; i < values.size(); ++i) {
        const auto& spec = out.schema().field(i).spec;
        if (spec.dimension() != Dimension::length) continue;
        const double native = convert_unit(values[i], spec, UnitSpec(profile_.sensor_unit)) + noise(rng_);
        values[i] = convert_unit(native, UnitSpec(profile_.sensor_unit), spec);
        if (const auto& r = spec.range()) values[i] = r->clamp(values[i]);
      }
      out = with_values(out.schema(), std::move(values));
    }
    reading_ = out.with_timestamp(t_last_);
    reading_due_ = false;
  }
  return *reading_;
}

DefRecord EmulatedBackend::observe_state() {
  require_init();
  return def_->state_record(motion_.parts()).with_timestamp(t_last_);
}

void EmulatedBackend::close() {
  def_.reset();
  queue_.clear();
}

const DefRecord& EmulatedBackend::effective_command() const {
  require_init();
  return *held_;
}

}  // namespace rems
