#include "rems/defrecord/schema.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <map>

#include "rems/error.hpp"

namespace rems {

struct Schema::Impl {
  std::string name;
  std::vector<Field> fields;
  std::map<std::string, std::size_t, std::less<>> index;
};

namespace {

void flatten_into(const std::string& prefix, const std::vector<FieldDef>& defs, std::vector<Field>& out) {
  for (const auto& def : defs) {
    if (!is_valid_key(def.key)) {
      throw Error(ErrorKind::invalid_argument, "invalid field key '" + def.key + "'");
    }
    const std::string key = prefix.empty() ? def.key : prefix + "." + def.key;
    if (const auto* spec = std::get_if<UnitSpec>(&def.spec)) {
      out.push_back(Field{key, *spec});
    } else {
      for (const auto& nested : std::get<Schema>(def.spec).fields()) {
        out.push_back(Field{key + "." + nested.key, nested.spec});
      }
    }
  }
}

}  // namespace

std::shared_ptr<const Schema::Impl> Schema::build(std::string name, std::vector<Field> fields) {
  auto impl = std::make_shared<Schema::Impl>();
  impl->name = std::move(name);
  std::vector<std::string> duplicates;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (!is_valid_key(fields[i].key)) {
      throw Error(ErrorKind::invalid_argument, "invalid field key '" + fields[i].key + "'");
    }
    if (!impl->index.emplace(fields[i].key, i).second) duplicates.push_back(fields[i].key);
  }
  // A leaf may not also be a group ("a" next to "a.b").
  for (const auto& f : fields) {
    const std::string prefix = f.key + ".";
    auto it = impl->index.lower_bound(prefix);
    if (it != impl->index.end() && it->first.compare(0, prefix.size(), prefix) == 0) {
      duplicates.push_back(f.key);
    }
  }
  if (!duplicates.empty()) {
    std::string msg = "duplicate or overlapping keys in schema '" + impl->name + "':";
    for (const auto& d : duplicates) msg += " " + d;
    throw Error(ErrorKind::key_collision, msg);
  }
  impl->fields = std::move(fields);
  return impl;
}

Schema::Schema() : impl_(std::make_shared<Impl>()) {}

Schema::Schema(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

Schema::Schema(std::string name, std::vector<FieldDef> defs) {
  std::vector<Field> flat;
  flatten_into("", defs, flat);
  impl_ = build(std::move(name), std::move(flat));
}

Schema Schema::from_fields(std::string name, std::vector<Field> fields) {
  return Schema(build(std::move(name), std::move(fields)));
}

const std::string& Schema::name() const noexcept { return impl_->name; }
std::size_t Schema::size() const noexcept { return impl_->fields.size(); }
std::span<const Field> Schema::fields() const noexcept { return impl_->fields; }

std::optional<std::size_t> Schema::index_of(std::string_view key) const noexcept {
  auto it = impl_->index.find(key);
  if (it == impl_->index.end()) return std::nullopt;
  return it->second;
}

const Field& Schema::field(std::string_view key) const {
  auto idx = index_of(key);
  if (!idx) throw Error(ErrorKind::unknown_key, "'" + std::string(key) + "' not in schema '" + name() + "'");
  return impl_->fields[*idx];
}

std::vector<std::string> Schema::keys() const {
  std::vector<std::string> out;
  out.reserve(size());
  for (const auto& f : impl_->fields) out.push_back(f.key);
  return out;
}

Schema Schema::group(std::string_view prefix) const {
  const std::string p = std::string(prefix) + ".";
  std::vector<Field> out;
  for (const auto& f : impl_->fields) {
    if (f.key.compare(0, p.size(), p) == 0) out.push_back(Field{f.key.substr(p.size()), f.spec});
  }
  return from_fields(std::string(prefix), std::move(out));
}

Schema Schema::select(std::string new_name, std::span<const std::string> keys) const {
  std::vector<Field> out;
  out.reserve(keys.size());
  for (const auto& k : keys) out.push_back(field(std::string_view(k)));
  return from_fields(std::move(new_name), std::move(out));
}

Schema Schema::renamed(std::string new_name) const {
  auto impl = std::make_shared<Impl>(*impl_);
  impl->name = std::move(new_name);
  return Schema(std::move(impl));
}

Schema Schema::with_field(const Field& f) const {
  std::vector<Field> out = impl_->fields;
  out.push_back(f);
  return from_fields(name(), std::move(out));
}

Schema Schema::with_spec(std::string_view key, const UnitSpec& spec) const {
  const Field& old = field(key);
  if (old.spec.dimension() != spec.dimension()) {
    throw Error(ErrorKind::dimension_mismatch, "field '" + old.key + "' is " +
                                                   std::string(to_string(old.spec.dimension())) + ", not " +
                                                   std::string(to_string(spec.dimension())));
  }
  std::vector<Field> out = impl_->fields;
  out[*index_of(key)].spec = spec;
  return from_fields(name(), std::move(out));
}

std::string Schema::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= 0xff;
    h *= 1099511628211ULL;
  };
  for (const auto& f : impl_->fields) {
    mix(f.key);
    mix(f.spec.unit_name());
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

bool Schema::operator==(const Schema& other) const noexcept {
  return impl_ == other.impl_ || impl_->fields == other.impl_->fields;
}

bool is_valid_key(std::string_view key) noexcept {
  if (key.empty()) return false;
  bool segment_start = true;
  for (char c : key) {
    if (std::isspace(static_cast<unsigned char>(c)) || c == ',' || c == '[' || c == ']' || c == '"') {
      return false;
    }
    if (c == '.') {
      if (segment_start) return false;
      segment_start = true;
    } else {
      segment_start = false;
    }
  }
  return !segment_start;
}

Schema concat(std::string name, const Schema& a, const Schema& b) {
  std::vector<std::string> collisions;
  for (const auto& f : b.fields()) {
    if (a.contains(f.key)) collisions.push_back(f.key);
  }
  if (!collisions.empty()) {
    std::string msg = "conflicting keys:";
    for (const auto& c : collisions) msg += " " + c;
    throw Error(ErrorKind::key_collision, msg);
  }
  std::vector<Field> out(a.fields().begin(), a.fields().end());
  out.insert(out.end(), b.fields().begin(), b.fields().end());
  return Schema::from_fields(std::move(name), std::move(out));
}

}  // namespace rems
