#include "rems/robotdefs/definition_file.hpp"

#include <toml.hpp>

#include <fstream>
#include <sstream>

#include "rems/robotdefs/builtins.hpp"

namespace rems {
namespace {

[[noreturn]] void fail(std::string_view source, const toml::source_region& where, const std::string& msg) {
  throw Error(ErrorKind::config_error,
              std::string(source) + ":" + std::to_string(where.begin.line) + ": " + msg);
}

double number(std::string_view source, const toml::node& node, std::string_view what) {
  if (auto v = node.value<double>()) return *v;
  fail(source, node.source(), std::string(what) + " must be a number");
}

std::vector<double> numbers(std::string_view source, const toml::node& node, std::string_view what,
                            std::size_t expected) {
  const auto* arr = node.as_array();
  if (arr == nullptr || arr->size() != expected) {
    fail(source, node.source(), std::string(what) + " must be an array of " + std::to_string(expected) + " numbers");
  }
  std::vector<double> out;
  for (const auto& n : *arr) out.push_back(number(source, n, what));
  return out;
}

UnitSpec field_spec(std::string_view source, const toml::node& node, const std::string& key) {
  const auto* tbl = node.as_table();
  if (tbl == nullptr) fail(source, node.source(), "field '" + key + "' must be a table { unit = ... }");
  auto unit = (*tbl)["unit"].value<std::string>();
  if (!unit) fail(source, node.source(), "field '" + key + "' needs a unit");
  try {
    UnitSpec spec(*unit);
    if (const auto* range = tbl->get("range")) {
      auto lohi = numbers(source, *range, "range", 2);
      spec = spec.with_range(lohi[0], lohi[1]);
    }
    if (const auto* def = tbl->get("default")) spec = spec.with_default(number(source, *def, "default"));
    return spec;
  } catch (const Error& e) {
    fail(source, node.source(), e.what());
  }
}

struct BaseSettings {
  std::string kind;
  double wheel_radius = 0, track_width = 0, half_length = 0, half_width = 0, max_wheel_speed = 0;
  std::optional<BaseSensors> sensors;
  std::vector<ArmLink<double>> links;
};

BaseSettings settings_of(const RobotDefinition& def) {
  BaseSettings s;
  const auto& part = def.parts().front();
  s.max_wheel_speed = part.max_wheel_speed;
  s.sensors = part.sensors;
  if (const auto* dd = std::get_if<DiffDriveKinematics>(&part.kinematics)) {
    s.kind = "diffdrive";
    s.wheel_radius = dd->params.wheel_radius();
    s.track_width = dd->params.track_width();
  } else if (const auto* mk = std::get_if<MecanumKinematics>(&part.kinematics)) {
    s.kind = "mecanum";
    s.wheel_radius = mk->params.wheel_radius();
    s.half_length = mk->params.half_length();
    s.half_width = mk->params.half_width();
  } else {
    s.kind = "arm";
    s.links = std::get<ArmKinematics>(part.kinematics).params.links();
  }
  return s;
}

void read_params(std::string_view source, const toml::table& params, BaseSettings& s) {
  if (auto kind = params["kind"].value<std::string>()) s.kind = *kind;
  auto num = [&](const char* key, double& out) {
    if (const auto* n = params.get(key)) out = number(source, *n, key);
  };
  num("wheel_radius", s.wheel_radius);
  num("track_width", s.track_width);
  num("half_length", s.half_length);
  num("half_width", s.half_width);
  num("max_wheel_speed", s.max_wheel_speed);

  const bool has_sensor_keys = params.contains("mounts") || params.contains("arena") || params.contains("max_range");
  if (has_sensor_keys && !s.sensors) s.sensors = BaseSensors{};
  if (const auto* n = params.get("max_range")) s.sensors->max_range = number(source, *n, "max_range");
  if (const auto* n = params.get("arena")) {
    auto a = numbers(source, *n, "arena", 4);
    try {
      s.sensors->arena = ArenaSpec(a[0], a[1], a[2], a[3]);
    } catch (const Error& e) {
      fail(source, n->source(), e.what());
    }
  }
  if (const auto* n = params.get("mounts")) {
    const auto* arr = n->as_array();
    if (arr == nullptr) fail(source, n->source(), "mounts must be an array of tables");
    s.sensors->mounts.clear();
    for (const auto& m : *arr) {
      const auto* t = m.as_table();
      if (t == nullptr) fail(source, m.source(), "mount must be a table");
      auto name = (*t)["name"].value<std::string>();
      if (!name) fail(source, m.source(), "mount needs a name");
      s.sensors->mounts.push_back(RangeMount{*name, {(*t)["x"].value_or(0.0), (*t)["y"].value_or(0.0),
                                                     (*t)["theta"].value_or(0.0)}});
    }
  }
  if (const auto* n = params.get("links")) {
    const auto* arr = n->as_array();
    if (arr == nullptr) fail(source, n->source(), "links must be an array of tables");
    s.links.clear();
    for (const auto& l : *arr) {
      const auto* t = l.as_table();
      if (t == nullptr) fail(source, l.source(), "arm link must be a table");
      ArmLink<double> link;
      if (const auto* axis = t->get("axis")) {
        auto v = numbers(source, *axis, "axis", 3);
        link.axis = Eigen::Vector3d(v[0], v[1], v[2]);
      }
      if (const auto* offset = t->get("offset")) {
        auto v = numbers(source, *offset, "offset", 3);
        link.offset = Eigen::Vector3d(v[0], v[1], v[2]);
      }
      if (const auto* rot = t->get("rotation")) {
        auto v = numbers(source, *rot, "rotation (w, x, y, z)", 4);
        link.rotation = Eigen::Quaterniond(v[0], v[1], v[2], v[3]);
      }
      s.links.push_back(link);
    }
  }
}

RobotDefinition build(std::string_view source, const std::string& name, const BaseSettings& s,
                      const toml::node& where) {
  try {
    if (s.kind == "diffdrive") {
      return RobotDefinition(name, {diffdrive_part("base", DiffDriveParams<double>(s.wheel_radius, s.track_width),
                                                   s.max_wheel_speed, s.sensors)});
    }
    if (s.kind == "mecanum") {
      return RobotDefinition(
          name, {mecanum_part("base", MecanumParams<double>(s.wheel_radius, s.half_length, s.half_width),
                              s.max_wheel_speed, s.sensors)});
    }
    if (s.kind == "arm") return RobotDefinition(name, {arm_part("arm", ArmParamsd(s.links))});
  } catch (const Error& e) {
    fail(source, where.source(), e.what());
  }
  fail(source, where.source(), "params.kind must be diffdrive, mecanum or arm (got '" + s.kind + "')");
}

std::vector<MappingRule> read_map_rules(std::string_view source, const toml::array& arr) {
  std::vector<MappingRule> rules;
  for (const auto& n : arr) {
    const auto* t = n.as_table();
    if (t == nullptr) fail(source, n.source(), "rules.map entries must be tables");
    std::vector<std::string> sources, targets;
    if (const auto* a = (*t)["sources"].as_array()) {
      for (const auto& k : *a) sources.push_back(k.value_or(std::string{}));
    }
    if (const auto* a = (*t)["targets"].as_array()) {
      for (const auto& k : *a) targets.push_back(k.value_or(std::string{}));
    }
    try {
      auto rule = MappingRule::linear(sources, targets, (*t)["gain"].value_or(1.0), (*t)["offset"].value_or(0.0));
      rules.push_back(rule.saturating((*t)["saturating"].value_or(false)));
    } catch (const Error& e) {
      fail(source, n.source(), e.what());
    }
  }
  return rules;
}

}  // namespace

RobotDefinition parse_definition(std::string_view toml_text, std::string_view source_name,
                                 const std::filesystem::path& base_dir) {
  toml::table doc;
  try {
    doc = toml::parse(toml_text, source_name);
  } catch (const toml::parse_error& e) {
    throw Error(ErrorKind::parse_error, std::string(source_name) + ":" + std::to_string(e.source().begin.line) +
                                            ": " + std::string(e.description()));
  }

  std::string name = doc["name"].value_or(std::string(source_name));
  RobotDefinition def;
  const auto* params = doc["params"].as_table();

  if (const auto* merge = doc["merge"].as_array()) {
    for (const auto& ref : *merge) {
      auto r = ref.value<std::string>();
      if (!r) fail(source_name, ref.source(), "merge entries must be definition names or paths");
      try {
        def = merge_definitions(def, resolve_definition(*r, base_dir));
      } catch (const Error& e) {
        fail(source_name, ref.source(), e.what());
      }
    }
    def = def.renamed(name);
  } else {
    BaseSettings settings;
    if (auto ext = doc["extends"].value<std::string>()) {
      RobotDefinition parent;
      try {
        parent = resolve_definition(*ext, base_dir);
      } catch (const Error& e) {
        fail(source_name, doc["extends"].node()->source(), e.what());
      }
      if (parent.parts().size() != 1) {
        fail(source_name, doc["extends"].node()->source(), "extends needs a single-part definition; use merge");
      }
      settings = settings_of(parent);
      if (params) read_params(source_name, *params, settings);
      def = build(source_name, name, settings, params ? static_cast<const toml::node&>(*params) : doc);
      def = def.with_wheel_links(parent.wheel_links()).with_input_rules(parent.input_rules());
    } else {
      if (params == nullptr) fail(source_name, doc.source(), "definition needs [params], extends or merge");
      read_params(source_name, *params, settings);
      def = build(source_name, name, settings, *params);
    }
  }

  for (Space space : {Space::input, Space::state, Space::output}) {
    const auto* section = doc[std::string(to_string(space))].as_table();
    if (section == nullptr) continue;
    for (const auto& [key, node] : *section) {
      const std::string k(key.str());
      try {
        def = def.with_field(space, k, field_spec(source_name, node, k));
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::config_error) throw;
        fail(source_name, node.source(), e.what());
      }
    }
  }

  if (const auto* rules = doc["rules"].as_table()) {
    if (const auto* links = (*rules)["links"].as_array()) {
      std::vector<WheelLinkRule> parsed;
      for (const auto& n : *links) {
        const auto* t = n.as_table();
        if (t == nullptr) fail(source_name, n.source(), "rules.links entries must be tables");
        WheelLinkRule rule;
        rule.master = (*t)["master"].value_or(std::string{});
        if (const auto* s = (*t)["slaves"].as_array()) {
          for (const auto& k : *s) rule.slaves.push_back(k.value_or(std::string{}));
        }
        if (const auto* g = (*t)["gains"].as_array()) {
          for (const auto& k : *g) rule.gains.push_back(number(source_name, k, "gain"));
        }
        parsed.push_back(std::move(rule));
      }
      try {
        def = def.with_wheel_links(std::move(parsed));
      } catch (const Error& e) {
        fail(source_name, links->source(), e.what());
      }
    }
    if (const auto* map = (*rules)["map"].as_array()) def = def.with_input_rules(read_map_rules(source_name, *map));
  }
  return def;
}

RobotDefinition load_definition_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io_error, "cannot open definition file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_definition(buf.str(), path.string(), path.parent_path());
}

RobotDefinition resolve_definition(std::string_view ref, const std::filesystem::path& base_dir) {
  if (is_builtin_definition(ref)) return builtin_definition(ref);
  std::filesystem::path p(ref);
  if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
  if (p.extension() == ".toml" || std::filesystem::exists(p)) return load_definition_file(p);
  return builtin_definition(ref);  // throws with the list of valid names
}

}  // namespace rems
