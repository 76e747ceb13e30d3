#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rems/defrecord/units.hpp"

namespace rems {

/// A flattened leaf: fully qualified dot-path key and its unit spec.
struct Field {
  std::string key;
  UnitSpec spec;

  bool operator==(const Field&) const = default;
};

struct FieldDef;

/// Ordered, immutable set of fields. Nested groups are accepted at
/// construction and flattened to dot-paths; nesting is a view over the flat
/// field list, never a different storage layout.
class Schema {
 public:
  Schema();
  Schema(std::string name, std::vector<FieldDef> fields);
  static Schema from_fields(std::string name, std::vector<Field> fields);

  const std::string& name() const noexcept;
  std::size_t size() const noexcept;
  bool empty() const noexcept { return size() == 0; }

  std::span<const Field> fields() const noexcept;
  const Field& field(std::size_t index) const { return fields()[index]; }
  std::optional<std::size_t> index_of(std::string_view key) const noexcept;
  bool contains(std::string_view key) const noexcept { return index_of(key).has_value(); }
  /// Throws UnknownKey.
  const Field& field(std::string_view key) const;
  std::vector<std::string> keys() const;

  /// Fields under `prefix.` with the prefix stripped.
  Schema group(std::string_view prefix) const;
  /// Subset in the order given; throws UnknownKey.
  Schema select(std::string name, std::span<const std::string> keys) const;
  Schema renamed(std::string name) const;
  Schema with_field(const Field& field) const;
  Schema with_spec(std::string_view key, const UnitSpec& spec) const;

  /// Stable 16-hex-digit FNV-1a digest over (key, unit) in order.
  std::string hash() const;

  /// Field lists equal (the name is a label, not part of the identity).
  bool operator==(const Schema& other) const noexcept;

 private:
  struct Impl;
  explicit Schema(std::shared_ptr<const Impl> impl);
  static std::shared_ptr<const Impl> build(std::string name, std::vector<Field> fields);
  std::shared_ptr<const Impl> impl_;
};

struct FieldDef {
  std::string key;
  std::variant<UnitSpec, Schema> spec;

  FieldDef(std::string k, UnitSpec s) : key(std::move(k)), spec(std::move(s)) {}
  FieldDef(std::string k, Schema nested) : key(std::move(k)), spec(std::move(nested)) {}
  FieldDef(std::string k, std::string_view unit) : key(std::move(k)), spec(UnitSpec(unit)) {}
  FieldDef(std::string k, const char* unit) : key(std::move(k)), spec(UnitSpec(unit)) {}
};

/// Validates a dot-path key: non-empty segments, no whitespace.
bool is_valid_key(std::string_view key) noexcept;

/// Concatenation `a` then `b`; throws KeyCollision naming every shared key.
Schema concat(std::string name, const Schema& a, const Schema& b);

}  // namespace rems
