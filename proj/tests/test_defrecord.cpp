#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "rems/defrecord/mapping.hpp"
#include "rems/defrecord/record.hpp"
#include "test_util.hpp"

using namespace rems;

namespace {

constexpr double kPi = std::numbers::pi;

Schema wheel_schema() { return Schema("wheels", {{"wh.l", "rad/s"}, {"wh.r", "rad/s"}}); }

}  // namespace

TEST_CASE("unit table") {
  CHECK(UnitSpec("rpm").dimension() == Dimension::angular_velocity);
  CHECK(canonical_unit(Dimension::linear_velocity) == "m/s");
  CHECK_THROWS_KIND(UnitSpec("furlong"), ErrorKind::unknown_unit);
  CHECK_THROWS_KIND(UnitSpec("duty").with_range(-1, 1).with_default(2), ErrorKind::range_violation);
  CHECK_THROWS_KIND(UnitSpec("duty").with_default(2).with_range(-1, 1), ErrorKind::range_violation);
  CHECK_THROWS_KIND(UnitSpec("m").with_range(1, 0), ErrorKind::invalid_argument);
  for (const auto& name : known_units()) CHECK(UnitSpec(name).scale_to_canonical() > 0);
  // Zero outside the range pulls the initial value to the nearest bound.
  CHECK(UnitSpec("m").with_range(1, 2).initial_value() == 1.0);
}

TEST_CASE("convert_unit examples") {
  CHECK(convert_unit(1.0, UnitSpec("rad/s"), UnitSpec("rpm")) == doctest::Approx(60.0 / (2 * kPi)).epsilon(1e-12));
  CHECK(std::abs(convert_unit(1.0, UnitSpec("rad/s"), UnitSpec("rpm")) - 9.549297) < 1e-6);
  CHECK(std::abs(convert_unit(90.0, UnitSpec("deg"), UnitSpec("rad")) - 1.570796) < 1e-6);
  CHECK(convert_unit(5.0, UnitSpec("s"), UnitSpec("s")) == 5.0);
  CHECK_THROWS_KIND(convert_unit(1.0, UnitSpec("m"), UnitSpec("rad/s")), ErrorKind::dimension_mismatch);
  // count and duty never cross into other dimensions
  CHECK_THROWS_KIND(convert_unit(1.0, UnitSpec("count"), UnitSpec("duty")), ErrorKind::dimension_mismatch);
  CHECK_THROWS_KIND(convert_unit(1.0, UnitSpec("duty"), UnitSpec("1")), ErrorKind::dimension_mismatch);
}

TEST_CASE("conversion round trip and composition over every same-dimension pair") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-1e6, 1e6);
  const auto names = known_units();
  for (const auto& a : names) {
    for (const auto& b : names) {
      UnitSpec ua(a), ub(b);
      if (ua.dimension() != ub.dimension()) continue;
      for (int i = 0; i < 200; ++i) {
        const double x = dist(rng);
        const double back = convert_unit(convert_unit(x, ua, ub), ub, ua);
        CHECK(std::abs(back - x) <= 1e-12 * std::abs(x));
        for (const auto& c : names) {
          UnitSpec uc(c);
          if (uc.dimension() != ua.dimension()) continue;
          const double direct = convert_unit(x, ua, uc);
          const double via = convert_unit(convert_unit(x, ua, ub), ub, uc);
          CHECK(std::abs(direct - via) <= 1e-12 * std::abs(direct));
        }
      }
    }
  }
}

TEST_CASE("schema keys and nesting") {
  Schema inner("wh", {{"l", "rad/s"}, {"r", "rad/s"}});
  Schema outer("robot", {{"wh", inner}, {"t", "s"}});
  CHECK(outer.keys() == std::vector<std::string>{"wh.l", "wh.r", "t"});
  CHECK(outer.group("wh") == inner);
  CHECK_THROWS_KIND(Schema("dup", {{"a", "m"}, {"a", "m"}}), ErrorKind::key_collision);
  CHECK_THROWS_KIND(Schema("overlap", {{"a", "m"}, {"a.b", "m"}}), ErrorKind::key_collision);
  CHECK_THROWS_KIND(Schema("bad", {{"a b", "m"}}), ErrorKind::invalid_argument);
  CHECK_THROWS_KIND(Schema("bad", {{"a..b", "m"}}), ErrorKind::invalid_argument);
  CHECK_THROWS_KIND(Schema("bad", {{"", "m"}}), ErrorKind::invalid_argument);
  CHECK(outer.hash() == Schema("other-name", {{"wh.l", "rad/s"}, {"wh.r", "rad/s"}, {"t", "s"}}).hash());
  CHECK(outer.hash() != Schema("x", {{"wh.l", "rpm"}, {"wh.r", "rad/s"}, {"t", "s"}}).hash());
}

TEST_CASE("create") {
  auto rec = make_record(wheel_schema());
  CHECK(rec["wh.l"] == 0.0);
  CHECK(rec["wh.r"] == 0.0);

  Schema duty("d", {{"duty", UnitSpec("duty").with_range(-1, 1).with_default(0)}});
  CHECK(make_record(duty, {{"duty", 0.5}})["duty"] == 0.5);

  Schema counts("c", {{"count", UnitSpec("count").with_range(-500, 500)}});
  CHECK_THROWS_KIND(make_record(counts, {{"count", 600}}), ErrorKind::range_violation);
  CHECK_THROWS_KIND(make_record(counts, {{"nope", 1}}), ErrorKind::unknown_key);

  Schema defaults("d", {{"a", "m"}, {"c", UnitSpec("m").with_default(7)}});
  CHECK(make_record(defaults)["c"] == 7.0);
}

TEST_CASE("set_value and get_value") {
  auto rec = set_value(make_record(wheel_schema()), "wh.l", 60.0, "rpm");
  CHECK(std::abs(rec["wh.l"] - 2 * kPi) < 1e-9);
  CHECK(std::abs(rec["wh.l"] - 6.2832) < 1e-4);
  CHECK(rec["wh.r"] == 0.0);
  CHECK_THROWS_KIND(set_value(rec, "wh.l", 1.0, "m"), ErrorKind::dimension_mismatch);
  CHECK_THROWS_KIND(set_value(rec, "wh.x", 1.0), ErrorKind::unknown_key);

  Schema duty("d", {{"duty", UnitSpec("duty").with_range(-1, 1)}});
  CHECK_THROWS_KIND(set_value(make_record(duty), "duty", -1.5), ErrorKind::range_violation);
  CHECK_THROWS_KIND(set_value(make_record(duty), "duty", std::nan("")), ErrorKind::range_violation);

  auto w = set_value(rec, "wh.r", 3.1416);
  CHECK(std::abs(get_value(w, "wh.r", "rpm") - 30.0) < 1e-3);
  CHECK(std::abs(get_value(set_value(rec, "wh.r", kPi), "wh.r", "rpm") - 30.0) < 1e-6);
  CHECK(get_value(make_record(wheel_schema()), "wh.r", "deg/s") == 0.0);
  Schema speed("v", {{"v", "m/s"}});
  CHECK(get_value(make_record(speed, {{"v", 0.25}}), "v", "m/s") == 0.25);
  CHECK_THROWS_KIND(get_value(w, "wh.r", "m"), ErrorKind::dimension_mismatch);
}

TEST_CASE("project") {
  Schema ab("ab", {{"a", "1"}, {"b", "1"}});
  auto rec = make_record(ab, {{"a", 1}, {"b", 2}});
  auto only_b = project(rec, Schema("b", {{"b", "1"}}));
  CHECK(only_b.schema().keys() == std::vector<std::string>{"b"});
  CHECK(only_b["b"] == 2.0);

  auto w = make_record(Schema("w", {{"w", "rad/s"}}), {{"w", 1.0}});
  CHECK(std::abs(project(w, Schema("w", {{"w", "rpm"}}))["w"] - 9.5493) < 1e-4);

  auto filled = project(make_record(Schema("a", {{"a", "1"}}), {{"a", 1}}),
                        Schema("ac", {{"a", "1"}, {"c", UnitSpec("1").with_default(7)}}));
  CHECK(filled["a"] == 1.0);
  CHECK(filled["c"] == 7.0);

  CHECK_THROWS_KIND(project(w, Schema("w", {{"w", "m"}})), ErrorKind::dimension_mismatch);
}

TEST_CASE("bind examples") {
  auto key = make_record(Schema("keys", {{"key.fwd", "1"}}), {{"key.fwd", 1}});
  auto target = make_record(wheel_schema());
  std::vector rules{MappingRule::linear({"key.fwd"}, {"wh.l", "wh.r"}, 2.0)};
  auto out = bind_record(target, key, rules);
  CHECK(out["wh.l"] == 2.0);
  CHECK(out["wh.r"] == 2.0);

  Schema counts("c", {{"count", UnitSpec("count").with_range(-500, 500)}});
  std::vector count_rule{MappingRule::linear({"vel"}, {"count"}, 1000.0)};
  auto slow = make_record(Schema("v", {{"vel", "m/s"}}), {{"vel", 0.25}});
  CHECK(bind_record(make_record(counts), slow, count_rule)["count"] == 250.0);
  auto fast = make_record(Schema("v", {{"vel", "m/s"}}), {{"vel", 0.75}});
  CHECK_THROWS_KIND(bind_record(make_record(counts), fast, count_rule), ErrorKind::range_violation);
  std::vector saturating{count_rule[0].saturating()};
  CHECK(bind_record(make_record(counts), fast, saturating)["count"] == 500.0);

  std::vector bad{MappingRule::linear({"nope"}, {"count"}, 1.0)};
  CHECK_THROWS_KIND(bind_record(make_record(counts), fast, bad), ErrorKind::unknown_key);
}

TEST_CASE("lookup, broadcast and custom rules") {
  auto src = [](double v) { return make_record(Schema("s", {{"raw", "1"}}), {{"raw", v}}); };
  Schema out("o", {{"y", "1"}});
  std::vector hold{MappingRule::lookup("raw", {"y"}, {{0, 0}, {10, 1}, {20, 4}}, Interpolation::hold)};
  std::vector lin{MappingRule::lookup("raw", {"y"}, {{0, 0}, {10, 1}, {20, 4}}, Interpolation::linear)};
  CHECK(bind_record(make_record(out), src(15), hold)["y"] == 1.0);
  CHECK(bind_record(make_record(out), src(15), lin)["y"] == doctest::Approx(2.5));
  CHECK(bind_record(make_record(out), src(-5), lin)["y"] == 0.0);
  CHECK(bind_record(make_record(out), src(99), hold)["y"] == 4.0);
  CHECK_THROWS_KIND(MappingRule::lookup("raw", {"y"}, {{0, 0}, {0, 1}}), ErrorKind::invalid_argument);

  auto w = make_record(Schema("w", {{"w", "rad/s"}}), {{"w", kPi}});
  std::vector bc{MappingRule::broadcast("w", {"a", "b"})};
  auto spread = bind_record(make_record(Schema("ab", {{"a", "rpm"}, {"b", "rad/s"}})), w, bc);
  CHECK(spread["a"] == doctest::Approx(30.0));
  CHECK(spread["b"] == kPi);
  CHECK_THROWS_KIND(bind_record(make_record(Schema("m", {{"a", "m"}})), w, std::vector{MappingRule::broadcast("w", {"a"})}),
                    ErrorKind::dimension_mismatch);

  register_custom_mapping("square", [](std::span<const double> x) { return std::vector<double>{x[0] * x[0]}; });
  std::vector sq{MappingRule::custom({"raw"}, {"y"}, "square")};
  CHECK(bind_record(make_record(out), src(3), sq)["y"] == 9.0);
  std::vector missing{MappingRule::custom({"raw"}, {"y"}, "cube")};
  CHECK_THROWS_KIND(bind_record(make_record(out), src(3), missing), ErrorKind::unknown_key);
}

TEST_CASE("later rules overwrite earlier targets") {
  auto src = make_record(Schema("s", {{"a", "1"}, {"b", "1"}}), {{"a", 1}, {"b", 5}});
  std::vector rules{MappingRule::linear({"a"}, {"x"}, 1.0), MappingRule::linear({"b"}, {"x"}, 1.0)};
  CHECK(bind_record(make_record(Schema("t", {{"x", "1"}})), src, rules)["x"] == 5.0);
}

TEST_CASE("flatten and unflatten") {
  auto rec = set_value(make_record(wheel_schema()), "wh.l", 6.2832);
  auto flat = flatten(rec);
  REQUIRE(flat.size() == 2);
  CHECK(flat[0] == FlatEntry{"wh.l", 6.2832, "rad/s"});
  CHECK(unflatten(wheel_schema(), flat) == rec);
  std::vector<FlatEntry> rpm{{"wh.r", 30, "rpm"}, {"wh.l", 0, "rad/s"}};
  CHECK(unflatten(wheel_schema(), rpm)["wh.r"] == doctest::Approx(kPi));
  std::vector<FlatEntry> missing{{"wh.r", 1, "rad/s"}};
  CHECK_THROWS_KIND(unflatten(wheel_schema(), missing), ErrorKind::schema_mismatch);
  std::vector<FlatEntry> bad_unit{{"wh.r", 1, "parsec/s"}, {"wh.l", 0, "rad/s"}};
  CHECK_THROWS_KIND(unflatten(wheel_schema(), bad_unit), ErrorKind::unknown_unit);
}

TEST_CASE("format_number round trips") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(-1e3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double v = dist(rng);
    CHECK(std::stod(format_number(v)) == v);
  }
  CHECK(format_number(0.01) == "0.01");
  CHECK(format_number(-0.0) == "0");
}

// Random schemas and values: every operation yields records that satisfy
// their schema, preserves key order, and project/bind agree.
TEST_CASE("property: operations preserve schema validity and key order") {
  std::mt19937_64 rng(11);
  const std::vector<std::string> pool{"m", "mm", "rad", "deg", "rad/s", "rpm", "m/s", "km/h", "s", "1"};
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::uniform_real_distribution<double> val(-100, 100);
  std::bernoulli_distribution coin(0.5);

  for (int trial = 0; trial < 300; ++trial) {
    std::vector<FieldDef> defs;
    const int n = 1 + static_cast<int>(rng() % 6);
    for (int i = 0; i < n; ++i) {
      UnitSpec spec(pool[pick(rng)]);
      if (coin(rng)) spec = spec.with_range(-50, 50);
      defs.emplace_back("g" + std::to_string(i % 2) + ".f" + std::to_string(i), spec);
    }
    Schema s("random", defs);
    ValueMap init;
    for (const auto& f : s.fields()) {
      if (coin(rng)) init[f.key] = f.spec.range() ? f.spec.range()->clamp(val(rng)) : val(rng);
    }
    auto rec = make_record(s, init);
    CHECK(rec.schema().keys() == s.keys());

    // Target schema: a shuffled subset with the same dimensions, some unit swaps.
    std::vector<Field> target_fields;
    for (const auto& f : s.fields()) {
      if (coin(rng)) target_fields.push_back(Field{f.key, UnitSpec(f.spec.unit_name())});
    }
    std::shuffle(target_fields.begin(), target_fields.end(), rng);
    target_fields.push_back(Field{"extra", UnitSpec("m").with_default(1.5)});
    Schema t = Schema::from_fields("target", target_fields);

    auto p = project(rec, t);
    CHECK(p.schema().keys() == t.keys());
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(t.field(i).spec.admits(p.at(i)));
    CHECK(project(p, t) == p);
    CHECK(bind_record(make_record(t), rec, {}) == p);

    for (const auto& f : s.fields()) {
      if (f.spec.range()) {
        CHECK_THROWS_KIND(set_value(rec, f.key, 1e6), ErrorKind::range_violation);
      } else {
        auto updated = set_value(rec, f.key, 42.0);
        CHECK(updated.schema().keys() == s.keys());
        CHECK(updated[f.key] == 42.0);
      }
    }
  }
}
