#include "rems/robotdefs/definition.hpp"

#include <algorithm>
#include <set>

namespace rems {
namespace {

const UnitSpec kMeters("m");
const UnitSpec kRadians("rad");
const UnitSpec kRadPerSec("rad/s");
const UnitSpec kUnitless("1");

std::vector<FieldDef> base_state_fields() { return {{"x", "m"}, {"y", "m"}, {"theta", "rad"}}; }

Schema base_output(const std::optional<BaseSensors>& sensors) {
  std::vector<FieldDef> defs;
  if (sensors) {
    for (const auto& m : sensors->mounts) {
      defs.emplace_back("range." + m.name, UnitSpec("m").with_range(0.0, sensors->max_range));
    }
  }
  defs.emplace_back("pose.x", "m");
  defs.emplace_back("pose.y", "m");
  defs.emplace_back("pose.theta", "rad");
  return Schema("output", defs);
}

void check_wheel_speed(double max_wheel_speed) {
  if (!(max_wheel_speed > 0)) throw Error(ErrorKind::invalid_argument, "max wheel speed must be positive");
}

std::string joint_key(std::size_t i) { return "joint.q" + std::to_string(i + 1); }

double to_canonical(const DefRecord& rec, std::string_view key) {
  const Field& f = rec.schema().field(key);
  return rec[key] * f.spec.scale_to_canonical();
}

double from_canonical(double canonical, const UnitSpec& spec) { return canonical / spec.scale_to_canonical(); }

template <typename... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

std::string_view to_string(Space s) noexcept {
  switch (s) {
    case Space::input: return "input";
    case Space::state: return "state";
    case Space::output: return "output";
  }
  return "?";
}

std::vector<std::string> DefinitionPart::wheel_keys() const {
  return std::visit(Overloaded{
                        [](const DiffDriveKinematics& k) { return std::vector<std::string>{k.left_key, k.right_key}; },
                        [](const MecanumKinematics& k) {
                          return std::vector<std::string>(k.wheel_keys.begin(), k.wheel_keys.end());
                        },
                        [](const ArmKinematics&) { return std::vector<std::string>{}; },
                    },
                    kinematics);
}

DefinitionPart diffdrive_part(std::string label, DiffDriveParams<double> params, double max_wheel_speed,
                              std::optional<BaseSensors> sensors) {
  check_wheel_speed(max_wheel_speed);
  DiffDriveKinematics k{params};
  Schema input("input", {{k.left_key, "rad/s"}, {k.right_key, "rad/s"}});
  Schema state("state", base_state_fields());
  Schema output = base_output(sensors);
  return DefinitionPart{std::move(label), k, max_wheel_speed, std::move(sensors), input, state, output};
}

DefinitionPart mecanum_part(std::string label, MecanumParams<double> params, double max_wheel_speed,
                            std::optional<BaseSensors> sensors) {
  check_wheel_speed(max_wheel_speed);
  MecanumKinematics k{params};
  std::vector<FieldDef> in;
  for (const auto& key : k.wheel_keys) in.emplace_back(key, "rad/s");
  Schema output = base_output(sensors);
  return DefinitionPart{std::move(label), k, max_wheel_speed, std::move(sensors), Schema("input", in),
                        Schema("state", base_state_fields()), output};
}

DefinitionPart arm_part(std::string label, ArmParamsd params) {
  std::vector<FieldDef> in, state;
  for (std::size_t i = 0; i < params.dof(); ++i) {
    in.emplace_back(joint_key(i), "rad");
    state.emplace_back(joint_key(i), "rad");
  }
  for (const char* k : {"ee.x", "ee.y", "ee.z"}) state.emplace_back(k, "m");
  for (const char* k : {"ee.qw", "ee.qx", "ee.qy", "ee.qz"}) state.emplace_back(k, "1");
  Schema output("output", {{"ee.x", "m"}, {"ee.y", "m"}, {"ee.z", "m"}});
  return DefinitionPart{std::move(label), ArmKinematics{std::move(params)}, 0.0, std::nullopt,
                        Schema("input", in),     Schema("state", state),     output};
}

RobotDefinition::RobotDefinition(std::string name, std::vector<DefinitionPart> parts,
                                 std::vector<WheelLinkRule> links, std::vector<MappingRule> input_rules)
    : name_(std::move(name)), parts_(std::move(parts)), links_(std::move(links)), rules_(std::move(input_rules)) {
  rebuild();
}

void RobotDefinition::rebuild() {
  std::vector<std::string> collisions;
  auto join = [&](Space space, auto member) {
    std::vector<Field> fields;
    std::set<std::string> seen;
    for (const auto& p : parts_) {
      for (const auto& f : (p.*member).fields()) {
        if (!seen.insert(f.key).second) collisions.push_back(std::string(to_string(space)) + "." + f.key);
        fields.push_back(f);
      }
    }
    return fields;
  };
  auto in = join(Space::input, &DefinitionPart::input);
  auto st = join(Space::state, &DefinitionPart::state);
  auto out = join(Space::output, &DefinitionPart::output);
  if (!collisions.empty()) {
    std::string msg = "definition '" + name_ + "' has conflicting keys:";
    for (const auto& c : collisions) msg += " " + c;
    throw Error(ErrorKind::key_collision, msg);
  }
  input_ = Schema::from_fields("input", std::move(in));
  state_ = Schema::from_fields("state", std::move(st));
  output_ = Schema::from_fields("output", std::move(out));

  std::set<std::string> masters, slaves;
  for (const auto& rule : links_) {
    if (!input_.contains(rule.master)) {
      throw Error(ErrorKind::unknown_key, "wheel link master '" + rule.master + "' is not an input key");
    }
    if (!rule.gains.empty() && rule.gains.size() != rule.slaves.size()) {
      throw Error(ErrorKind::invalid_argument, "wheel link for '" + rule.master + "' needs one gain per slave");
    }
    masters.insert(rule.master);
    for (const auto& s : rule.slaves) {
      if (input_.contains(s)) throw Error(ErrorKind::key_collision, "slave '" + s + "' is already an input key");
      if (!slaves.insert(s).second) throw Error(ErrorKind::key_collision, "slave '" + s + "' is linked twice");
    }
  }
  for (const auto& s : slaves) {
    if (masters.count(s)) throw Error(ErrorKind::invalid_argument, "wheel link chain through '" + s + "'");
  }
  actuators_ = input_;
  for (const auto& rule : links_) {
    for (const auto& s : rule.slaves) actuators_ = actuators_.with_field(Field{s, input_.field(rule.master).spec});
  }
  actuators_ = actuators_.renamed("actuators");
}

const Schema& RobotDefinition::schema(Space s) const noexcept {
  switch (s) {
    case Space::input: return input_;
    case Space::state: return state_;
    case Space::output: return output_;
  }
  return input_;
}

bool RobotDefinition::has_arm() const noexcept {
  return std::any_of(parts_.begin(), parts_.end(), [](const auto& p) { return !p.is_wheeled(); });
}

RobotDefinition RobotDefinition::renamed(std::string name) const {
  RobotDefinition out = *this;
  out.name_ = std::move(name);
  return out;
}

RobotDefinition RobotDefinition::with_overrides(DefinitionOverrides overrides) const {
  RobotDefinition out = *this;
  out.overrides_ = std::move(overrides);
  return out;
}

RobotDefinition RobotDefinition::with_field(Space space, std::string_view key, const UnitSpec& spec) const {
  RobotDefinition out = *this;
  for (auto& p : out.parts_) {
    Schema& s = space == Space::input ? p.input : space == Space::state ? p.state : p.output;
    if (s.contains(key)) {
      s = s.with_spec(key, spec);
      out.rebuild();
      return out;
    }
  }
  throw Error(ErrorKind::unknown_key, "'" + std::string(key) + "' is not a " + std::string(to_string(space)) +
                                          " key of '" + name_ + "'");
}

RobotDefinition RobotDefinition::with_wheel_links(std::vector<WheelLinkRule> links) const {
  RobotDefinition out = *this;
  out.links_ = std::move(links);
  out.rebuild();
  return out;
}

RobotDefinition RobotDefinition::with_input_rules(std::vector<MappingRule> rules) const {
  RobotDefinition out = *this;
  out.rules_ = std::move(rules);
  return out;
}

std::vector<MotionCommand> RobotDefinition::drive_map(const DefRecord& input) const {
  std::vector<MotionCommand> out;
  out.reserve(parts_.size());
  for (const auto& p : parts_) {
    out.push_back(std::visit(
        Overloaded{
            [&](const DiffDriveKinematics& k) -> MotionCommand {
              DiffWheels<double> w(to_canonical(input, k.left_key), to_canonical(input, k.right_key));
              return diffdrive_fk(w, k.params);
            },
            [&](const MecanumKinematics& k) -> MotionCommand {
              MecanumWheels<double> w;
              for (int i = 0; i < 4; ++i) w(i) = to_canonical(input, k.wheel_keys[static_cast<std::size_t>(i)]);
              return mecanum_fk(w, k.params);
            },
            [&](const ArmKinematics& k) -> MotionCommand {
              Eigen::VectorXd q(static_cast<Eigen::Index>(k.params.dof()));
              for (std::size_t i = 0; i < k.params.dof(); ++i) {
                q(static_cast<Eigen::Index>(i)) = to_canonical(input, joint_key(i));
              }
              return q;
            },
        },
        p.kinematics));
  }
  return out;
}

std::vector<PartState> RobotDefinition::initial_part_states() const {
  std::vector<PartState> out;
  for (const auto& p : parts_) {
    if (p.is_wheeled()) {
      out.emplace_back(Pose2d{});
    } else {
      out.emplace_back(Eigen::VectorXd::Zero(
          static_cast<Eigen::Index>(std::get<ArmKinematics>(p.kinematics).params.dof())));
    }
  }
  return out;
}

DefRecord RobotDefinition::state_record(std::span<const PartState> states) const {
  if (states.size() != parts_.size()) {
    throw Error(ErrorKind::schema_mismatch, "expected one state per definition part");
  }
  std::vector<double> values;
  values.reserve(state_.size());
  for (std::size_t i = 0; i < parts_.size(); ++i) {
    const auto& part = parts_[i];
    const auto& fields = part.state.fields();
    std::vector<double> canonical;
    if (part.is_wheeled()) {
      const auto& pose = std::get<Pose2d>(states[i]);
      canonical = {pose.x, pose.y, pose.theta};
    } else {
      const auto& q = std::get<Eigen::VectorXd>(states[i]);
      const auto& arm = std::get<ArmKinematics>(part.kinematics).params;
      const Pose3d ee = arm_fk(q, arm);
      canonical.assign(q.data(), q.data() + q.size());
      canonical.insert(canonical.end(), {ee.position.x(), ee.position.y(), ee.position.z(), ee.orientation.w(),
                                         ee.orientation.x(), ee.orientation.y(), ee.orientation.z()});
    }
    for (std::size_t j = 0; j < fields.size(); ++j) values.push_back(from_canonical(canonical[j], fields[j].spec));
  }
  return with_values(state_, std::move(values));
}

std::vector<PartState> RobotDefinition::part_states(const DefRecord& state) const {
  std::vector<PartState> out;
  for (const auto& p : parts_) {
    if (p.is_wheeled()) {
      out.emplace_back(Pose2d{to_canonical(state, "x"), to_canonical(state, "y"), to_canonical(state, "theta")});
    } else {
      const auto dof = std::get<ArmKinematics>(p.kinematics).params.dof();
      Eigen::VectorXd q(static_cast<Eigen::Index>(dof));
      for (std::size_t i = 0; i < dof; ++i) q(static_cast<Eigen::Index>(i)) = to_canonical(state, joint_key(i));
      out.emplace_back(std::move(q));
    }
  }
  return out;
}

DefRecord RobotDefinition::sense_map(const DefRecord& state) const {
  const auto states = part_states(state);
  std::vector<double> values;
  values.reserve(output_.size());
  for (std::size_t i = 0; i < parts_.size(); ++i) {
    const auto& part = parts_[i];
    std::vector<double> canonical;
    if (part.is_wheeled()) {
      const auto& pose = std::get<Pose2d>(states[i]);
      if (part.sensors) {
        const auto& s = *part.sensors;
        // Outside the arena every ray reads zero (the robot is in a wall).
        if (s.arena.contains(pose.x, pose.y)) {
          canonical = range_sensor_model(pose, s.mounts, s.arena, s.max_range);
        } else {
          canonical.assign(s.mounts.size(), 0.0);
        }
      }
      canonical.insert(canonical.end(), {pose.x, pose.y, pose.theta});
    } else {
      const auto& arm = std::get<ArmKinematics>(part.kinematics).params;
      const Pose3d ee = arm_fk(std::get<Eigen::VectorXd>(states[i]), arm);
      canonical = {ee.position.x(), ee.position.y(), ee.position.z()};
    }
    const auto& fields = part.output.fields();
    for (std::size_t j = 0; j < fields.size(); ++j) {
      double v = from_canonical(canonical[j], fields[j].spec);
      if (fields[j].spec.range()) v = fields[j].spec.range()->clamp(v);
      values.push_back(v);
    }
  }
  return with_values(output_, std::move(values));
}

ActuatorMaps RobotDefinition::actuator_maps(const UnitSpec& native) const {
  if (has_arm()) throw Error(ErrorKind::schema_incompatible, "'" + name_ + "' has arm joints, not wheel actuators");
  const Dimension dim = native.dimension();
  if (dim != Dimension::angular_velocity && dim != Dimension::duty && dim != Dimension::count) {
    throw Error(ErrorKind::schema_incompatible, "native unit " + native.unit_name() + " cannot drive wheels");
  }
  ActuatorMaps maps;
  std::vector<Field> native_fields;
  for (const auto& f : actuators_.fields()) native_fields.push_back(Field{f.key, native});
  maps.native = Schema::from_fields("native", std::move(native_fields));

  auto owning_part = [&](const std::string& key) -> const DefinitionPart& {
    std::string master = key;
    for (const auto& l : links_) {
      if (std::find(l.slaves.begin(), l.slaves.end(), key) != l.slaves.end()) master = l.master;
    }
    for (const auto& p : parts_) {
      if (p.input.contains(master)) return p;
    }
    throw Error(ErrorKind::unknown_key, "no part owns actuator '" + key + "'");
  };

  for (const auto& f : actuators_.fields()) {
    const DefinitionPart& part = owning_part(f.key);
    // Gain from the field's own unit to one native unit.
    double gain = 0.0;
    if (dim == Dimension::angular_velocity) {
      gain = f.spec.scale_to_canonical() / native.scale_to_canonical();
    } else if (dim == Dimension::duty) {
      gain = f.spec.scale_to_canonical() / part.max_wheel_speed;
    } else {
      // Counts are wheel surface speed in mm/s.
      const double r = std::holds_alternative<DiffDriveKinematics>(part.kinematics)
                           ? std::get<DiffDriveKinematics>(part.kinematics).params.wheel_radius()
                           : std::get<MecanumKinematics>(part.kinematics).params.wheel_radius();
      gain = f.spec.scale_to_canonical() * r * 1000.0;
    }
    maps.to_native.push_back(MappingRule::linear({f.key}, {f.key}, gain).saturating());
    maps.from_native.push_back(MappingRule::linear({f.key}, {f.key}, 1.0 / gain).saturating());
  }
  return maps;
}

std::vector<MappingRule> RobotDefinition::teleop_rules(const Schema& teleop) const {
  // Teleop axes scale a unit twist (forward, strafe, turn) sized so that a
  // full deflection on one axis drives every wheel at max_wheel_speed.
  std::vector<std::string> axes;
  std::vector<int> axis_index;
  const std::array<const char*, 3> names{"fwd", "strafe", "turn"};
  for (int i = 0; i < 3; ++i) {
    if (teleop.contains(names[static_cast<std::size_t>(i)])) {
      axes.emplace_back(names[static_cast<std::size_t>(i)]);
      axis_index.push_back(i);
    }
  }
  std::vector<MappingRule> rules;
  if (axes.empty()) return rules;
  for (const auto& p : parts_) {
    if (!p.is_wheeled()) continue;
    Eigen::MatrixXd ik;
    Eigen::Vector3d scale;
    if (const auto* dd = std::get_if<DiffDriveKinematics>(&p.kinematics)) {
      const double r = dd->params.wheel_radius();
      const double d = dd->params.track_width();
      ik.resize(2, 3);
      ik << 1 / r, 0, -d / (2 * r),
            1 / r, 0, d / (2 * r);
      scale << r * p.max_wheel_speed, 0.0, 2 * r * p.max_wheel_speed / d;
    } else {
      const auto& mk = std::get<MecanumKinematics>(p.kinematics);
      ik = mecanum_inverse_jacobian(mk.params);
      const double v = mk.params.wheel_radius() * p.max_wheel_speed;
      scale << v, v, v / mk.params.lever();
    }
    const auto keys = p.wheel_keys();
    Eigen::MatrixXd gains(ik.rows(), static_cast<Eigen::Index>(axes.size()));
    for (std::size_t a = 0; a < axes.size(); ++a) {
      const auto col = static_cast<Eigen::Index>(axis_index[a]);
      gains.col(static_cast<Eigen::Index>(a)) = ik.col(col) * scale(col);
    }
    for (std::size_t w = 0; w < keys.size(); ++w) {
      gains.row(static_cast<Eigen::Index>(w)) /= p.input.field(keys[w]).spec.scale_to_canonical();
    }
    rules.push_back(MappingRule::affine(axes, keys, gains, Eigen::VectorXd::Zero(gains.rows())).saturating());
  }
  return rules;
}

RobotDefinition merge_definitions(const RobotDefinition& a, const RobotDefinition& b) {
  if (b.empty()) return a;
  if (a.empty()) return b;
  std::vector<std::string> collisions;
  for (Space s : {Space::input, Space::state, Space::output}) {
    for (const auto& f : b.schema(s).fields()) {
      if (a.schema(s).contains(f.key)) collisions.push_back(std::string(to_string(s)) + "." + f.key);
    }
  }
  for (const auto& lb : b.wheel_links()) {
    for (const auto& slave : lb.slaves) {
      if (a.actuator_schema().contains(slave)) collisions.push_back("actuator." + slave);
    }
  }
  if (!collisions.empty()) {
    std::string msg = "cannot merge '" + a.name() + "' and '" + b.name() + "':";
    for (const auto& c : collisions) msg += " " + c;
    throw Error(ErrorKind::key_collision, msg);
  }
  auto parts = a.parts();
  parts.insert(parts.end(), b.parts().begin(), b.parts().end());
  auto links = a.wheel_links();
  links.insert(links.end(), b.wheel_links().begin(), b.wheel_links().end());
  auto rules = a.input_rules();
  rules.insert(rules.end(), b.input_rules().begin(), b.input_rules().end());
  RobotDefinition merged(a.name() + "+" + b.name(), std::move(parts), std::move(links), std::move(rules));
  return merged.with_overrides(a.overrides().sense ? a.overrides() : b.overrides());
}

DefRecord expand_wheel_links(const DefRecord& masters, std::span<const WheelLinkRule> rules) {
  Schema schema = masters.schema();
  std::vector<double> values(masters.values().begin(), masters.values().end());
  for (const auto& rule : rules) {
    const auto idx = schema.index_of(rule.master);
    if (!idx) throw Error(ErrorKind::unknown_key, "wheel link master '" + rule.master + "' missing");
    const Field master = schema.field(*idx);
    const double v = masters.at(*idx);
    for (std::size_t i = 0; i < rule.slaves.size(); ++i) {
      const double gain = rule.gains.empty() ? 1.0 : rule.gains[i];
      schema = schema.with_field(Field{rule.slaves[i], master.spec});
      values.push_back(gain * v);
    }
  }
  return with_values(schema, std::move(values)).with_timestamp(masters.timestamp()).with_stale(masters.stale());
}

}  // namespace rems
