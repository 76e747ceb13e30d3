#include "rems/defrecord/units.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "rems/error.hpp"

namespace rems {
namespace {

struct UnitEntry {
  std::string_view name;
  Dimension dimension;
  double scale;
};

constexpr double kPi = std::numbers::pi;

constexpr std::array kUnitTable{
    UnitEntry{"m", Dimension::length, 1.0},
    UnitEntry{"mm", Dimension::length, 1e-3},
    UnitEntry{"cm", Dimension::length, 1e-2},
    UnitEntry{"km", Dimension::length, 1e3},
    UnitEntry{"in", Dimension::length, 0.0254},
    UnitEntry{"ft", Dimension::length, 0.3048},
    UnitEntry{"rad", Dimension::angle, 1.0},
    UnitEntry{"deg", Dimension::angle, kPi / 180.0},
    UnitEntry{"rev", Dimension::angle, 2.0 * kPi},
    UnitEntry{"m/s", Dimension::linear_velocity, 1.0},
    UnitEntry{"mm/s", Dimension::linear_velocity, 1e-3},
    UnitEntry{"cm/s", Dimension::linear_velocity, 1e-2},
    UnitEntry{"km/h", Dimension::linear_velocity, 1.0 / 3.6},
    UnitEntry{"rad/s", Dimension::angular_velocity, 1.0},
    UnitEntry{"deg/s", Dimension::angular_velocity, kPi / 180.0},
    UnitEntry{"rpm", Dimension::angular_velocity, 2.0 * kPi / 60.0},
    UnitEntry{"rev/s", Dimension::angular_velocity, 2.0 * kPi},
    UnitEntry{"s", Dimension::time, 1.0},
    UnitEntry{"ms", Dimension::time, 1e-3},
    UnitEntry{"min", Dimension::time, 60.0},
    UnitEntry{"1", Dimension::dimensionless, 1.0},
    UnitEntry{"%", Dimension::dimensionless, 0.01},
    UnitEntry{"count", Dimension::count, 1.0},
    UnitEntry{"duty", Dimension::duty, 1.0},
};

const UnitEntry* find_unit(std::string_view name) noexcept {
  for (const auto& entry : kUnitTable) {
    if (entry.name == name) return &entry;
  }
  return nullptr;
}

}  // namespace

std::string_view to_string(Dimension d) noexcept {
  switch (d) {
    case Dimension::length: return "length";
    case Dimension::angle: return "angle";
    case Dimension::linear_velocity: return "linear_velocity";
    case Dimension::angular_velocity: return "angular_velocity";
    case Dimension::time: return "time";
    case Dimension::dimensionless: return "dimensionless";
    case Dimension::count: return "count";
    case Dimension::duty: return "duty";
  }
  return "?";
}

std::string_view canonical_unit(Dimension d) noexcept {
  switch (d) {
    case Dimension::length: return "m";
    case Dimension::angle: return "rad";
    case Dimension::linear_velocity: return "m/s";
    case Dimension::angular_velocity: return "rad/s";
    case Dimension::time: return "s";
    case Dimension::dimensionless: return "1";
    case Dimension::count: return "count";
    case Dimension::duty: return "duty";
  }
  return "?";
}

UnitSpec::UnitSpec(std::string_view unit_name) {
  const UnitEntry* entry = find_unit(unit_name);
  if (entry == nullptr) {
    throw Error(ErrorKind::unknown_unit, "unit '" + std::string(unit_name) + "' is not in the unit table");
  }
  dimension_ = entry->dimension;
  unit_name_ = std::string(entry->name);
  scale_ = entry->scale;
}

UnitSpec UnitSpec::with_range(double lo, double hi) const {
  if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw Error(ErrorKind::invalid_argument, "range requires finite lo <= hi");
  }
  if (default_ && (*default_ < lo || *default_ > hi)) {
    throw Error(ErrorKind::range_violation, "default lies outside the new range");
  }
  UnitSpec out = *this;
  out.range_ = Interval{lo, hi};
  return out;
}

UnitSpec UnitSpec::with_default(double value) const {
  if (!std::isfinite(value)) throw Error(ErrorKind::invalid_argument, "default must be finite");
  if (range_ && !range_->contains(value)) {
    throw Error(ErrorKind::range_violation, "default " + std::to_string(value) + " lies outside range");
  }
  UnitSpec out = *this;
  out.default_ = value;
  return out;
}

double UnitSpec::initial_value() const noexcept {
  if (default_) return *default_;
  return range_ ? range_->clamp(0.0) : 0.0;
}

bool UnitSpec::admits(double value) const noexcept {
  if (!std::isfinite(value)) return false;
  return !range_ || range_->contains(value);
}

bool is_known_unit(std::string_view unit_name) noexcept { return find_unit(unit_name) != nullptr; }

std::vector<std::string> known_units() {
  std::vector<std::string> out;
  out.reserve(kUnitTable.size());
  for (const auto& entry : kUnitTable) out.emplace_back(entry.name);
  return out;
}

double convert_unit(double value, const UnitSpec& from, const UnitSpec& to) {
  if (from.dimension() != to.dimension()) {
    throw Error(ErrorKind::dimension_mismatch, "cannot convert " + from.unit_name() + " (" +
                                                   std::string(to_string(from.dimension())) + ") to " +
                                                   to.unit_name() + " (" +
                                                   std::string(to_string(to.dimension())) + ")");
  }
  if (from.unit_name() == to.unit_name()) return value;
  return value * from.scale_to_canonical() / to.scale_to_canonical();
}

}  // namespace rems
