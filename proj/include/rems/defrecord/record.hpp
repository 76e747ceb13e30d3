#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rems/defrecord/schema.hpp"

namespace rems {

using ValueMap = std::map<std::string, double, std::less<>>;

/// Named-field record whose values always satisfy their schema: exactly the
/// schema's keys, each value finite and inside its field range. Mutating
/// operations are free functions returning a new record.
class DefRecord {
 public:
  /// Empty record over the empty schema.
  DefRecord() = default;

  const Schema& schema() const noexcept { return schema_; }
  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }

  /// Value in the field's own unit; throws UnknownKey.
  double operator[](std::string_view key) const;
  double at(std::size_t index) const { return values_.at(index); }

  /// Nested group view: fields under `prefix.` with the prefix stripped.
  DefRecord group(std::string_view prefix) const;

  std::optional<double> timestamp() const noexcept { return timestamp_; }
  DefRecord with_timestamp(std::optional<double> t) const;
  /// Set when a device missed its reply window and the values are held.
  bool stale() const noexcept { return stale_; }
  DefRecord with_stale(bool stale) const;

  bool operator==(const DefRecord& other) const noexcept;

 private:
  friend DefRecord make_record(const Schema&, const ValueMap&);
  friend DefRecord set_value(const DefRecord&, std::string_view, double, std::optional<std::string_view>);
  friend DefRecord with_values(const Schema&, std::vector<double>);

  DefRecord(Schema schema, std::vector<double> values);

  Schema schema_;
  std::vector<double> values_;
  std::optional<double> timestamp_;
  bool stale_ = false;
};

/// Unset fields take the field default, else the dimension zero.
/// Throws UnknownKey, RangeViolation.
DefRecord make_record(const Schema& schema, const ValueMap& initial = {});

/// Builds a record from values in schema order; every value is range checked.
DefRecord with_values(const Schema& schema, std::vector<double> values);

/// Converts from `in_unit` (if given) into the field unit, then range checks.
/// Throws UnknownKey, UnknownUnit, DimensionMismatch, RangeViolation.
DefRecord set_value(const DefRecord& rec, std::string_view key, double value,
                    std::optional<std::string_view> in_unit = std::nullopt);

/// Throws UnknownKey, UnknownUnit, DimensionMismatch.
double get_value(const DefRecord& rec, std::string_view key, std::optional<std::string_view> out_unit = std::nullopt);

/// Re-shapes `rec` onto `target`: shared keys converted, target-only keys
/// defaulted, source-only keys dropped. Timestamp and stale flag carry over.
DefRecord project(const DefRecord& rec, const Schema& target);

/// One (dot-path key, value, unit) triple of the flattened serialization.
struct FlatEntry {
  std::string key;
  double value = 0.0;
  std::string unit;

  bool operator==(const FlatEntry&) const = default;
};

std::vector<FlatEntry> flatten(const DefRecord& rec);

/// Inverse of flatten against a known schema. Entries must cover exactly the
/// schema keys (any order); values are converted from the entry unit.
/// Throws SchemaMismatch, UnknownUnit, DimensionMismatch, RangeViolation.
DefRecord unflatten(const Schema& schema, std::span<const FlatEntry> entries);

/// Shortest decimal representation that parses back to the same double.
std::string format_number(double value);

}  // namespace rems
