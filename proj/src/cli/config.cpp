#include "rems/cli/config.hpp"

#include <toml.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "rems/backends/analytical.hpp"
#include "rems/backends/emulated.hpp"
#include "rems/error.hpp"
#include "rems/robotdefs/definition_file.hpp"

namespace rems {

namespace {

namespace fs = std::filesystem;

const std::set<std::string, std::less<>> kRunKeys{"dt",   "duration",       "realtime_factor", "seed",       "out",
                                                  "bind", "broadcast_rate", "progress",        "job_threads"};
const std::set<std::string, std::less<>> kRobotKeys{"id",     "definition", "implementation",
                                                    "input",  "outputs",    "implementation_first"};
const std::set<std::string, std::less<>> kProfileKeys{"extends",      "native_unit",     "native_range",
                                                      "device_rate",  "command_latency", "quantization",
                                                      "deadband",     "noise_std",       "sensor_unit"};

std::string join(const std::set<std::string, std::less<>>& names) {
  std::string s;
  for (const auto& n : names) s += (s.empty() ? "" : ", ") + n;
  return s;
}

/// Collects every problem, then throws them as one ConfigError.
class Diagnostics {
 public:
  explicit Diagnostics(std::string source) : source_(std::move(source)) {}

  void at(const toml::node& node, const std::string& msg) { at_line(node.source().begin.line, msg); }
  void at_line(std::size_t line, const std::string& msg) {
    items_.push_back(source_ + (line > 0 ? ":" + std::to_string(line) : "") + ": " + msg);
  }
  void plain(const std::string& msg) { items_.push_back(msg); }
  bool empty() const noexcept { return items_.empty(); }

  void throw_if_any() const {
    if (items_.empty()) return;
    std::string msg = std::to_string(items_.size()) + (items_.size() == 1 ? " problem" : " problems") + " in config:";
    for (const auto& i : items_) msg += "\n  " + i;
    throw Error(ErrorKind::config_error, msg);
  }

 private:
  std::string source_;
  std::vector<std::string> items_;
};

bool valid_id(std::string_view id) {
  return !id.empty() && std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

void check_keys(Diagnostics& diag, const toml::table& tbl, const std::set<std::string, std::less<>>& known,
                std::string_view where) {
  for (const auto& [k, v] : tbl) {
    if (!known.count(k.str())) {
      diag.at(v, "unknown key '" + std::string(k.str()) + "' in " + std::string(where) + " (known: " + join(known) + ")");
    }
  }
}

std::optional<double> read_number(Diagnostics& diag, const toml::table& tbl, std::string_view key) {
  const auto* node = tbl.get(key);
  if (node == nullptr) return std::nullopt;
  if (auto v = node->value<double>()) return *v;
  diag.at(*node, std::string(key) + " must be a number");
  return std::nullopt;
}

std::optional<std::string> read_string(Diagnostics& diag, const toml::table& tbl, std::string_view key) {
  const auto* node = tbl.get(key);
  if (node == nullptr) return std::nullopt;
  if (auto v = node->value<std::string>()) return *v;
  diag.at(*node, std::string(key) + " must be a string");
  return std::nullopt;
}

std::optional<bool> read_bool(Diagnostics& diag, const toml::table& tbl, std::string_view key) {
  const auto* node = tbl.get(key);
  if (node == nullptr) return std::nullopt;
  if (auto v = node->value<bool>()) return *v;
  diag.at(*node, std::string(key) + " must be true or false");
  return std::nullopt;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto at = s.find(sep, start);
    out.emplace_back(s.substr(start, at == std::string_view::npos ? std::string_view::npos : at - start));
    if (at == std::string_view::npos) return out;
    start = at + 1;
  }
}

/// Stores a TOML literal if the text parses as one, else a plain string.
void assign_override(toml::table& tbl, std::string_view key, const std::string& text) {
  try {
    auto doc = toml::parse("v = " + text);
    if (auto* n = doc.get("v")) {
      n->visit([&](const auto& v) { tbl.insert_or_assign(key, v); });
      return;
    }
  } catch (const toml::parse_error&) {
  }
  tbl.insert_or_assign(key, text);
}

void apply_override(Diagnostics& diag, toml::table& doc, const Override& ov) {
  const auto where = "--set " + ov.key;
  auto parts = split(ov.key, '.');
  if (parts.size() == 1) parts.insert(parts.begin(), "run");
  auto bad = [&](const std::string& msg) { diag.plain(where + ": " + msg); };

  if (parts[0] == "run" && parts.size() == 2) {
    if (!kRunKeys.count(parts[1])) return bad("unknown run key '" + parts[1] + "' (known: " + join(kRunKeys) + ")");
    auto* run = doc["run"].as_table();
    if (run == nullptr) run = doc.insert_or_assign("run", toml::table{}).first->second.as_table();
    assign_override(*run, parts[1], ov.value);
    return;
  }
  if (parts[0] == "robot" && parts.size() == 3) {
    if (!kRobotKeys.count(parts[2])) {
      return bad("unknown robot key '" + parts[2] + "' (known: " + join(kRobotKeys) + ")");
    }
    auto* robots = doc["robot"].as_array();
    if (robots == nullptr) return bad("config has no [[robot]] entries");
    // Robots without an explicit id match the default id of a built-in
    // definition; file definitions are only reachable by index.
    toml::table* target = nullptr;
    std::map<std::string, int> uses;
    for (std::size_t i = 0; i < robots->size(); ++i) {
      auto* t = (*robots)[i].as_table();
      if (t == nullptr) continue;
      auto id = (*t)["id"].value<std::string>();
      const auto def = (*t)["definition"].value<std::string>();
      if (!id && def && !def->ends_with(".toml")) {
        const int n = ++uses[*def];
        id = *def + (n > 1 ? "-" + std::to_string(n) : "");
        std::replace(id->begin(), id->end(), '+', '_');
      }
      if ((id && *id == parts[1]) || std::to_string(i) == parts[1]) target = t;
    }
    if (target == nullptr) return bad("no robot with id or index '" + parts[1] + "'");
    assign_override(*target, parts[2], ov.value);
    return;
  }
  if (parts[0] == "profiles" && parts.size() == 3) {
    auto* profiles = doc["profiles"].as_table();
    auto* p = profiles ? (*profiles)[parts[1]].as_table() : nullptr;
    if (p == nullptr) return bad("no profile '" + parts[1] + "' in [profiles]");
    if (!kProfileKeys.count(parts[2])) {
      return bad("unknown profile key '" + parts[2] + "' (known: " + join(kProfileKeys) + ")");
    }
    assign_override(*p, parts[2], ov.value);
    return;
  }
  bad("not a config key; use run.<key>, robot.<id>.<key> or profiles.<name>.<key>");
}

std::optional<DeviceProfile> read_profile(Diagnostics& diag, const std::string& name, const toml::table& tbl) {
  check_keys(diag, tbl, kProfileKeys, "[profiles." + name + "]");
  DeviceProfile p;
  if (auto base = read_string(diag, tbl, "extends")) {
    try {
      p = builtin_profile(*base);
    } catch (const Error& e) {
      diag.at(*tbl.get("extends"), e.what());
      return std::nullopt;
    }
  }
  p.name = name;
  bool ok = true;
  try {
    if (auto u = read_string(diag, tbl, "native_unit")) p.native_input = UnitSpec(*u);
    if (const auto* r = tbl.get("native_range")) {
      const auto* arr = r->as_array();
      if (arr == nullptr || arr->size() != 2 || !(*arr)[0].value<double>() || !(*arr)[1].value<double>()) {
        diag.at(*r, "native_range must be [lo, hi]");
        ok = false;
      } else {
        p.native_input = p.native_input.with_range(*(*arr)[0].value<double>(), *(*arr)[1].value<double>());
      }
    }
  } catch (const Error& e) {
    diag.at(tbl, "profile '" + name + "': " + e.what());
    ok = false;
  }
  if (auto v = read_number(diag, tbl, "device_rate")) p.device_rate = *v;
  if (auto v = read_number(diag, tbl, "command_latency")) p.command_latency = *v;
  if (auto v = read_number(diag, tbl, "quantization")) p.quantization = *v;
  if (auto v = read_number(diag, tbl, "deadband")) p.deadband = *v;
  if (auto v = read_number(diag, tbl, "noise_std")) p.noise_std = *v;
  if (auto v = read_string(diag, tbl, "sensor_unit")) p.sensor_unit = *v;
  try {
    p.validate();
  } catch (const Error& e) {
    diag.at(tbl, "profile '" + name + "': " + e.what());
    ok = false;
  }
  if (!ok) return std::nullopt;
  return p;
}

}  // namespace

bool RunConfig::wants_endpoint() const noexcept {
  return std::any_of(robots.begin(), robots.end(),
                     [](const RobotConfig& r) { return r.broadcast || r.input == InputKind::teleop; });
}

Override Override::parse(std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw Error(ErrorKind::config_error, "override '" + std::string(text) + "' must look like key=value");
  }
  return {std::string(text.substr(0, eq)), std::string(text.substr(eq + 1))};
}

std::pair<std::string, std::uint16_t> parse_bind(std::string_view text) {
  const auto colon = text.rfind(':');
  const auto fail = [&] {
    throw Error(ErrorKind::config_error, "bind address '" + std::string(text) + "' must be host:port");
  };
  if (colon == std::string_view::npos || colon == 0) fail();
  const std::string port_text(text.substr(colon + 1));
  if (port_text.empty() || port_text.size() > 5 ||
      !std::all_of(port_text.begin(), port_text.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    fail();
  }
  const long port = std::stol(port_text);
  if (port > 65535) fail();
  return {std::string(text.substr(0, colon)), static_cast<std::uint16_t>(port)};
}

RunConfig parse_config(const fs::path& path, const std::vector<Override>& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::config_error, "cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string(), fs::absolute(path).parent_path(), overrides);
}

RunConfig parse_config_text(std::string_view toml_text, std::string_view source_name, const fs::path& base_dir,
                            const std::vector<Override>& overrides) {
  toml::table doc;
  try {
    doc = toml::parse(toml_text, source_name);
  } catch (const toml::parse_error& e) {
    throw Error(ErrorKind::parse_error, std::string(source_name) + ":" + std::to_string(e.source().begin.line) +
                                            ": " + std::string(e.description()));
  }
  Diagnostics diag{std::string(source_name)};
  for (const auto& ov : overrides) apply_override(diag, doc, ov);

  RunConfig cfg;
  cfg.source = std::string(source_name);

  for (const auto& [k, v] : doc) {
    if (k != "run" && k != "robot" && k != "profiles") {
      diag.at(v, "unknown top-level key '" + std::string(k.str()) + "' (known: run, robot, profiles)");
    }
  }

  // [run]
  fs::path out = "out";
  if (const auto* node = doc.get("run")) {
    if (const auto* run = node->as_table()) {
      check_keys(diag, *run, kRunKeys, "[run]");
      if (auto v = read_number(diag, *run, "dt")) cfg.run.dt = *v;
      if (auto v = read_number(diag, *run, "duration")) cfg.run.duration = *v;
      if (auto v = read_number(diag, *run, "realtime_factor")) {
        cfg.run.realtime_factor = *v;
        cfg.realtime_factor_set = true;
      }
      if (const auto* s = run->get("seed")) {
        auto v = s->value<std::int64_t>();
        if (!v || *v < 0) {
          diag.at(*s, "seed must be a non-negative integer");
        } else {
          cfg.run.seed = static_cast<std::uint64_t>(*v);
        }
      }
      if (auto v = read_string(diag, *run, "out")) out = *v;
      if (auto v = read_string(diag, *run, "bind")) {
        try {
          std::tie(cfg.bind_host, cfg.bind_port) = parse_bind(*v);
        } catch (const Error& e) {
          diag.at(*run->get("bind"), e.what());
        }
      }
      if (auto v = read_number(diag, *run, "broadcast_rate")) cfg.broadcast_rate = *v;
      if (auto v = read_bool(diag, *run, "progress")) cfg.run.progress = *v;
      if (const auto* j = run->get("job_threads")) {
        auto v = j->value<std::int64_t>();
        if (!v || *v < 1 || *v > 256) {
          diag.at(*j, "job_threads must be an integer in [1, 256]");
        } else {
          cfg.run.job_threads = static_cast<std::size_t>(*v);
        }
      }
    } else {
      diag.at(*node, "[run] must be a table");
    }
  }
  cfg.run.out_dir = out.is_absolute() ? out : base_dir / out;
  try {
    cfg.run.validate();
  } catch (const Error& e) {
    // Point at the offending key when the config set it.
    const toml::node* culprit = nullptr;
    if (const auto* run = doc["run"].as_table()) {
      for (const char* key : {"dt", "duration", "realtime_factor"}) {
        if (run->get(key) && std::string_view(e.what()).find(std::string(": ") + key + " ") != std::string_view::npos) {
          culprit = run->get(key);
        }
      }
    }
    if (culprit) {
      diag.at(*culprit, std::string("[run] ") + e.what());
    } else {
      diag.plain(std::string(source_name) + ": [run] " + e.what());
    }
  }
  if (cfg.run.dt > 0 && !(cfg.broadcast_rate > 0 && cfg.broadcast_rate * cfg.run.dt <= 1.0 + 1e-9)) {
    diag.plain(std::string(source_name) + ": [run] broadcast_rate must be in (0, 1/dt] = (0, " +
               format_number(1.0 / cfg.run.dt) + "] Hz");
  }

  // [profiles.*]
  std::map<std::string, DeviceProfile, std::less<>> profiles;
  std::set<std::string, std::less<>> broken_profiles;
  if (const auto* node = doc.get("profiles")) {
    if (const auto* tbl = node->as_table()) {
      for (const auto& [name, v] : *tbl) {
        const auto* p = v.as_table();
        if (p == nullptr) {
          diag.at(v, "[profiles." + std::string(name.str()) + "] must be a table");
          continue;
        }
        if (auto prof = read_profile(diag, std::string(name.str()), *p)) {
          profiles.emplace(std::string(name.str()), *prof);
        } else {
          broken_profiles.insert(std::string(name.str()));
        }
      }
    } else {
      diag.at(*node, "[profiles] must be a table");
    }
  }
  auto profile_names = [&] {
    std::string s;
    for (const auto& n : builtin_profile_names()) s += " " + n;
    for (const auto& [n, _] : profiles) s += " " + n;
    return s;
  };

  // [[robot]]
  const auto* robots = doc.get("robot") ? doc.get("robot")->as_array() : nullptr;
  if (doc.get("robot") && robots == nullptr) diag.at(*doc.get("robot"), "robot must be an array of tables [[robot]]");
  if (robots == nullptr || robots->empty()) diag.plain(std::string(source_name) + ": no [[robot]] entries");
  std::set<std::string> ids;
  std::map<std::string, int> name_uses;
  for (std::size_t i = 0; robots && i < robots->size(); ++i) {
    const auto* tbl = (*robots)[i].as_table();
    if (tbl == nullptr) {
      diag.at((*robots)[i], "each [[robot]] must be a table");
      continue;
    }
    const std::string label = "robot " + std::to_string(i);
    check_keys(diag, *tbl, kRobotKeys, "[[robot]]");
    RobotConfig rc;
    bool ok = true;

    // definition
    if (auto ref = read_string(diag, *tbl, "definition")) {
      rc.definition_ref = *ref;
      try {
        rc.definition = resolve_definition(*ref, base_dir);
      } catch (const Error& e) {
        diag.at(*tbl->get("definition"), e.what());
        ok = false;
      }
    } else {
      if (!tbl->get("definition")) diag.at(*tbl, label + ": missing 'definition'");
      ok = false;
    }

    // id
    if (auto id = read_string(diag, *tbl, "id")) {
      rc.id = *id;
    } else if (ok) {
      const int n = ++name_uses[rc.definition.name()];
      rc.id = rc.definition.name() + (n > 1 ? "-" + std::to_string(n) : "");
      std::replace(rc.id.begin(), rc.id.end(), '+', '_');
    } else {
      rc.id = "robot-" + std::to_string(i);
    }
    if (!valid_id(rc.id)) {
      diag.at(tbl->get("id") ? *tbl->get("id") : static_cast<const toml::node&>(*tbl),
              "robot id '" + rc.id + "' may only use letters, digits, '_' and '-'");
    } else if (!ids.insert(rc.id).second) {
      diag.at(*tbl, "duplicate robot id '" + rc.id + "'");
    }
    const auto* anchor = static_cast<const toml::node*>(tbl);

    // implementation
    rc.implementation = read_string(diag, *tbl, "implementation").value_or("analytical");
    const auto* impl_node = tbl->get("implementation") ? tbl->get("implementation") : anchor;
    BackendPtr probe;
    if (rc.implementation == "analytical") {
      rc.kind = ImplementationKind::analytical;
      probe = std::make_unique<AnalyticalBackend>();
    } else if (rc.implementation.rfind("emulated:", 0) == 0) {
      rc.kind = ImplementationKind::emulated;
      const auto name = rc.implementation.substr(9);
      if (auto it = profiles.find(name); it != profiles.end()) {
        rc.profile = it->second;
      } else if (broken_profiles.count(name)) {
        ok = false;  // already reported
      } else {
        try {
          rc.profile = builtin_profile(name);
        } catch (const Error&) {
          diag.at(*impl_node, "unknown device profile '" + name + "'; valid:" + profile_names());
          ok = false;
        }
      }
      if (ok) probe = std::make_unique<EmulatedBackend>(rc.profile);
    } else if (rc.implementation.rfind("bridge:", 0) == 0) {
      rc.kind = ImplementationKind::bridge;
      try {
        rc.endpoint = BridgeEndpoint::parse(rc.implementation.substr(7));
        probe = std::make_unique<BridgeBackend>(rc.endpoint);
      } catch (const Error& e) {
        diag.at(*impl_node, e.what());
        ok = false;
      }
    } else {
      diag.at(*impl_node, "implementation '" + rc.implementation +
                              "' must be analytical, emulated:<profile> or bridge:<ws-url>");
      ok = false;
    }
    if (ok && probe && !rc.definition.empty()) {
      try {
        probe->check_compatible(rc.definition);
      } catch (const Error& e) {
        diag.at(*impl_node, std::string(e.what()));
        ok = false;
      }
    }

    // input
    const auto input = read_string(diag, *tbl, "input").value_or("none");
    const auto* input_node = tbl->get("input") ? tbl->get("input") : anchor;
    if (input == "none") {
      rc.input = InputKind::none;
    } else if (input == "teleop") {
      rc.input = InputKind::teleop;
    } else if (input.rfind("trajectory:", 0) == 0) {
      rc.input = InputKind::trajectory;
      fs::path p = input.substr(11);
      rc.trajectory_path = p.is_absolute() ? p : base_dir / p;
      try {
        rc.trajectory = load_trajectory(rc.trajectory_path);
        if (!rc.definition.empty()) check_trajectory(*rc.trajectory, rc.definition);
      } catch (const Error& e) {
        diag.at(*input_node, std::string(e.what()));
      }
    } else {
      diag.at(*input_node, "input '" + input + "' must be trajectory:<path>, teleop or none");
    }

    // outputs
    std::vector<std::string> outputs;
    if (const auto* o = tbl->get("outputs")) {
      if (auto s = o->value<std::string>()) {
        outputs.push_back(*s);
      } else if (const auto* arr = o->as_array()) {
        for (const auto& e : *arr) {
          if (auto s = e.value<std::string>()) {
            outputs.push_back(*s);
          } else {
            diag.at(e, "outputs entries must be strings");
          }
        }
      } else {
        diag.at(*o, "outputs must be a string or an array of strings");
      }
    }
    for (const auto& o : outputs) {
      if (o == "broadcast") {
        rc.broadcast = true;
      } else if (o == "log") {
        rc.log_dirs.push_back(cfg.run.out_dir);
      } else if (o.rfind("log:", 0) == 0 && o.size() > 4) {
        fs::path p = o.substr(4);
        rc.log_dirs.push_back(p.is_absolute() ? p : cfg.run.out_dir / p);
      } else {
        diag.at(*tbl->get("outputs"), "output '" + o + "' must be log, log:<dir> or broadcast");
      }
    }
    if (auto v = read_bool(diag, *tbl, "implementation_first")) rc.implementation_first = *v;
    cfg.robots.push_back(std::move(rc));
  }

  diag.throw_if_any();
  return cfg;
}

}  // namespace rems
