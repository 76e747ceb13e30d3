#include "rems/defrecord/record.hpp"

#include <charconv>
#include <cmath>
#include <system_error>

#include "rems/error.hpp"

namespace rems {
namespace {

void check_range(const Field& field, double value) {
  if (!field.spec.admits(value)) {
    std::string msg = "'" + field.key + "' = " + format_number(value) + " " + field.spec.unit_name();
    if (field.spec.range()) {
      msg += " outside [" + format_number(field.spec.range()->lo) + ", " + format_number(field.spec.range()->hi) + "]";
    } else {
      msg += " is not finite";
    }
    throw Error(ErrorKind::range_violation, msg);
  }
}

}  // namespace

DefRecord::DefRecord(Schema schema, std::vector<double> values)
    : schema_(std::move(schema)), values_(std::move(values)) {}

double DefRecord::operator[](std::string_view key) const {
  auto idx = schema_.index_of(key);
  if (!idx) throw Error(ErrorKind::unknown_key, "'" + std::string(key) + "' not in schema '" + schema_.name() + "'");
  return values_[*idx];
}

DefRecord DefRecord::group(std::string_view prefix) const {
  Schema sub = schema_.group(prefix);
  if (sub.empty()) throw Error(ErrorKind::unknown_key, "no fields under '" + std::string(prefix) + "'");
  std::vector<double> vals;
  vals.reserve(sub.size());
  const std::string p = std::string(prefix) + ".";
  for (const auto& f : sub.fields()) vals.push_back((*this)[p + f.key]);
  DefRecord out(std::move(sub), std::move(vals));
  out.timestamp_ = timestamp_;
  out.stale_ = stale_;
  return out;
}

DefRecord DefRecord::with_timestamp(std::optional<double> t) const {
  DefRecord out = *this;
  out.timestamp_ = t;
  return out;
}

DefRecord DefRecord::with_stale(bool stale) const {
  DefRecord out = *this;
  out.stale_ = stale;
  return out;
}

bool DefRecord::operator==(const DefRecord& other) const noexcept {
  return schema_ == other.schema_ && values_ == other.values_ && timestamp_ == other.timestamp_ &&
         stale_ == other.stale_;
}

DefRecord make_record(const Schema& schema, const ValueMap& initial) {
  std::vector<double> values;
  values.reserve(schema.size());
  for (const auto& f : schema.fields()) values.push_back(f.spec.initial_value());
  for (const auto& [key, value] : initial) {
    auto idx = schema.index_of(key);
    if (!idx) throw Error(ErrorKind::unknown_key, "'" + key + "' not in schema '" + schema.name() + "'");
    check_range(schema.field(*idx), value);
    values[*idx] = value;
  }
  return DefRecord(schema, std::move(values));
}

DefRecord with_values(const Schema& schema, std::vector<double> values) {
  if (values.size() != schema.size()) {
    throw Error(ErrorKind::schema_mismatch, "expected " + std::to_string(schema.size()) + " values, got " +
                                                std::to_string(values.size()));
  }
  for (std::size_t i = 0; i < values.size(); ++i) check_range(schema.field(i), values[i]);
  return DefRecord(schema, std::move(values));
}

DefRecord set_value(const DefRecord& rec, std::string_view key, double value, std::optional<std::string_view> in_unit) {
  const Field& field = rec.schema().field(key);
  double converted = value;
  if (in_unit) converted = convert_unit(value, UnitSpec(*in_unit), field.spec);
  check_range(field, converted);
  DefRecord out = rec;
  out.values_[*rec.schema().index_of(key)] = converted;
  return out;
}

double get_value(const DefRecord& rec, std::string_view key, std::optional<std::string_view> out_unit) {
  const Field& field = rec.schema().field(key);
  const double v = rec[key];
  if (!out_unit) return v;
  return convert_unit(v, field.spec, UnitSpec(*out_unit));
}

DefRecord project(const DefRecord& rec, const Schema& target) {
  std::vector<double> values;
  values.reserve(target.size());
  for (const auto& f : target.fields()) {
    if (auto idx = rec.schema().index_of(f.key)) {
      values.push_back(convert_unit(rec.at(*idx), rec.schema().field(*idx).spec, f.spec));
    } else {
      values.push_back(f.spec.initial_value());
    }
  }
  return with_values(target, std::move(values)).with_timestamp(rec.timestamp()).with_stale(rec.stale());
}

std::vector<FlatEntry> flatten(const DefRecord& rec) {
  std::vector<FlatEntry> out;
  out.reserve(rec.size());
  for (std::size_t i = 0; i < rec.size(); ++i) {
    const Field& f = rec.schema().field(i);
    out.push_back(FlatEntry{f.key, rec.at(i), f.spec.unit_name()});
  }
  return out;
}

DefRecord unflatten(const Schema& schema, std::span<const FlatEntry> entries) {
  std::vector<double> values(schema.size(), 0.0);
  std::vector<bool> seen(schema.size(), false);
  for (const auto& e : entries) {
    auto idx = schema.index_of(e.key);
    if (!idx) throw Error(ErrorKind::schema_mismatch, "unexpected key '" + e.key + "'");
    if (seen[*idx]) throw Error(ErrorKind::schema_mismatch, "duplicate key '" + e.key + "'");
    seen[*idx] = true;
    values[*idx] = convert_unit(e.value, UnitSpec(e.unit), schema.field(*idx).spec);
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) throw Error(ErrorKind::schema_mismatch, "missing key '" + schema.field(i).key + "'");
  }
  return with_values(schema, std::move(values));
}

std::string format_number(double value) {
  if (value == 0.0) return "0";
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, end);
}

}  // namespace rems
