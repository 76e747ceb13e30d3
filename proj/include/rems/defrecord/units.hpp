#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rems {

enum class Dimension {
  length,
  angle,
  linear_velocity,
  angular_velocity,
  time,
  dimensionless,
  count,
  duty,
};

std::string_view to_string(Dimension d) noexcept;

/// Canonical unit per dimension: m, rad, m/s, rad/s, s, 1, count, duty.
std::string_view canonical_unit(Dimension d) noexcept;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double v) const noexcept { return v >= lo && v <= hi; }
  double clamp(double v) const noexcept { return v < lo ? lo : (v > hi ? hi : v); }
  bool operator==(const Interval&) const = default;
};

/// A unit drawn from the fixed unit table, plus an optional range and default
/// expressed in that unit. Unknown unit names fail at construction.
class UnitSpec {
 public:
  explicit UnitSpec(std::string_view unit_name);

  UnitSpec with_range(double lo, double hi) const;
  UnitSpec with_default(double value) const;

  Dimension dimension() const noexcept { return dimension_; }
  const std::string& unit_name() const noexcept { return unit_name_; }
  double scale_to_canonical() const noexcept { return scale_; }
  const std::optional<Interval>& range() const noexcept { return range_; }
  std::optional<double> default_value() const noexcept { return default_; }

  /// Default if present, else zero, pulled into range when zero is excluded.
  double initial_value() const noexcept;
  bool admits(double value) const noexcept;

  bool operator==(const UnitSpec&) const = default;

 private:
  Dimension dimension_;
  std::string unit_name_;
  double scale_;
  std::optional<Interval> range_;
  std::optional<double> default_;
};

bool is_known_unit(std::string_view unit_name) noexcept;
std::vector<std::string> known_units();

/// value * from.scale / to.scale; throws DimensionMismatch across dimensions.
double convert_unit(double value, const UnitSpec& from, const UnitSpec& to);

}  // namespace rems
