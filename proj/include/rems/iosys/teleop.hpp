#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>

#include "rems/defrecord/mapping.hpp"
#include "rems/defrecord/record.hpp"
#include "rems/runtime/systems.hpp"

namespace rems {

/// fwd, turn, strafe, each dimensionless in [-1, 1].
const Schema& teleop_schema();

struct TeleopCommand {
  std::string source;
  double t_received = 0.0;
  ValueMap keys;  // partial; missing axes read as zero
  std::string target = "all";  // "all" or a robot id
};

/// bind(create(target), cmd as record, rules). Throws UnknownKey for keys
/// outside the teleop schema, RangeViolation outside [-1, 1].
DefRecord teleop_to_input(const TeleopCommand& cmd, std::span<const MappingRule> rules, const Schema& target);

/// Input system fed by teleop commands from any thread. Each robot applies
/// the newest command addressed to it or to "all" and holds it until a newer
/// one arrives. A robot that has heard nothing keeps its initial input.
class TeleopHub final : public InputSystem {
 public:
  /// May be called once per attached robot; robots accumulate.
  void setup(const std::vector<RobotInfo>& robots) override;
  std::optional<DefRecord> sample(double t, const RobotInfo& robot) override;

  /// Validates and stores the command. Throws UnknownKey, RangeViolation,
  /// InvalidArgument (target names no attached robot).
  void submit(TeleopCommand cmd);
  std::uint64_t accepted() const;

 private:
  struct Entry {
    std::vector<MappingRule> rules;
    Schema input;
    std::optional<DefRecord> latest;
  };
  mutable std::mutex mu_;
  std::map<std::string, Entry, std::less<>> robots_;
  std::uint64_t seq_ = 0;
};

}  // namespace rems
