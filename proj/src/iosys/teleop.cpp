#include "rems/iosys/teleop.hpp"

#include "rems/error.hpp"

namespace rems {

const Schema& teleop_schema() {
  static const Schema s("teleop", {{"fwd", UnitSpec("1").with_range(-1, 1)},
                                   {"turn", UnitSpec("1").with_range(-1, 1)},
                                   {"strafe", UnitSpec("1").with_range(-1, 1)}});
  return s;
}

DefRecord teleop_to_input(const TeleopCommand& cmd, std::span<const MappingRule> rules, const Schema& target) {
  const auto source = make_record(teleop_schema(), cmd.keys);
  return bind_record(make_record(target), source, rules);
}

void TeleopHub::setup(const std::vector<RobotInfo>& robots) {
  std::lock_guard lock(mu_);
  for (const auto& r : robots) {
    robots_[r.id] = Entry{r.definition.teleop_rules(teleop_schema()), r.definition.input_schema(), {}};
  }
}

std::optional<DefRecord> TeleopHub::sample(double t, const RobotInfo& robot) {
  std::lock_guard lock(mu_);
  const auto it = robots_.find(robot.id);
  if (it == robots_.end() || !it->second.latest) return std::nullopt;
  return it->second.latest->with_timestamp(t);
}

void TeleopHub::submit(TeleopCommand cmd) {
  std::lock_guard lock(mu_);
  if (cmd.target != "all" && !robots_.count(cmd.target)) {
    throw Error(ErrorKind::invalid_argument, "teleop target '" + cmd.target + "' is not a teleop robot");
  }
  // Validate once against the teleop schema before touching any robot.
  make_record(teleop_schema(), cmd.keys);
  ++seq_;
  for (auto& [id, e] : robots_) {
    if (cmd.target != "all" && cmd.target != id) continue;
    e.latest = teleop_to_input(cmd, e.rules, e.input);
  }
}

std::uint64_t TeleopHub::accepted() const {
  std::lock_guard lock(mu_);
  return seq_;
}

}  // namespace rems
