#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "rems/defrecord/record.hpp"

namespace rems {

enum class Interpolation { hold, linear };

/// targets = gains * sources + offsets, in the fields' own units.
struct LinearMap {
  Eigen::MatrixXd gains;
  Eigen::VectorXd offsets;
};

/// Piecewise map of a single source; breakpoints strictly increasing in x.
struct LookupMap {
  std::vector<std::pair<double, double>> breakpoints;
  Interpolation interpolation = Interpolation::hold;
};

/// One source copied (with unit conversion) to every target.
struct BroadcastMap {};

/// A registered pure function looked up by name at application time.
struct CustomMap {
  std::string function;
};

using CustomFunction = std::function<std::vector<double>(std::span<const double>)>;

/// Registers (or replaces) a named mapping function. Thread-safe.
void register_custom_mapping(std::string name, CustomFunction fn);
bool has_custom_mapping(std::string_view name);

class MappingRule {
 public:
  using Kind = std::variant<LinearMap, LookupMap, BroadcastMap, CustomMap>;

  /// Scalar gain: one source fans out to every target, or N sources map
  /// element-wise onto N targets.
  static MappingRule linear(std::vector<std::string> sources, std::vector<std::string> targets, double gain,
                            double offset = 0.0);
  static MappingRule affine(std::vector<std::string> sources, std::vector<std::string> targets,
                            Eigen::MatrixXd gains, Eigen::VectorXd offsets);
  static MappingRule lookup(std::string source, std::vector<std::string> targets,
                            std::vector<std::pair<double, double>> breakpoints,
                            Interpolation interpolation = Interpolation::hold);
  static MappingRule broadcast(std::string source, std::vector<std::string> targets);
  static MappingRule custom(std::vector<std::string> sources, std::vector<std::string> targets,
                            std::string function);

  /// Saturating rules clamp into the target range instead of raising.
  MappingRule saturating(bool on = true) const;

  const std::vector<std::string>& source_keys() const noexcept { return sources_; }
  const std::vector<std::string>& target_keys() const noexcept { return targets_; }
  const Kind& kind() const noexcept { return kind_; }
  bool is_saturating() const noexcept { return saturating_; }

  /// Raw numeric application (no unit or range handling). Broadcast copies.
  std::vector<double> apply(std::span<const double> sources) const;

 private:
  MappingRule(std::vector<std::string> sources, std::vector<std::string> targets, Kind kind);

  std::vector<std::string> sources_;
  std::vector<std::string> targets_;
  Kind kind_;
  bool saturating_ = false;
};

/// Fills `target`'s schema from `source`: rules run in order (later rules
/// overwrite earlier ones); keys no rule names follow project semantics.
/// Throws UnknownKey, DimensionMismatch, RangeViolation.
DefRecord bind_record(const DefRecord& target, const DefRecord& source, std::span<const MappingRule> rules);

}  // namespace rems
