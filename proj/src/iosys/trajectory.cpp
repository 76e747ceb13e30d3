#include "rems/iosys/trajectory.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rems/error.hpp"

namespace rems {

namespace {

[[noreturn]] void parse_fail(std::string_view source, std::size_t line, const std::string& what) {
  throw Error(ErrorKind::parse_error, std::string(source) + ":" + std::to_string(line) + ": " + what);
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) return out;
    start = comma + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

Trajectory parse_trajectory(std::string_view csv, std::string_view source) {
  Trajectory traj;
  std::vector<Field> fields;
  bool has_stale = false;
  std::size_t columns = 0;
  std::size_t line_no = 0;
  bool header_seen = false;

  std::size_t pos = 0;
  while (pos <= csv.size()) {
    const auto nl = csv.find('\n', pos);
    std::string_view line = csv.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? csv.size() + 1 : nl + 1;
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;

    const auto cells = split_commas(line);
    if (!header_seen) {
      header_seen = true;
      if (trim(cells[0]) != "t") parse_fail(source, line_no, "first header column must be 't'");
      std::size_t n = cells.size();
      if (n > 1 && trim(cells[n - 1]) == "stale") {
        has_stale = true;
        --n;
      }
      for (std::size_t i = 1; i < n; ++i) {
        const auto cell = trim(cells[i]);
        const auto open = cell.find('[');
        if (open == std::string_view::npos || cell.back() != ']') {
          parse_fail(source, line_no, "header column '" + std::string(cell) + "' is not key[unit]");
        }
        const std::string key(trim(cell.substr(0, open)));
        const std::string unit(trim(cell.substr(open + 1, cell.size() - open - 2)));
        if (!is_valid_key(key)) parse_fail(source, line_no, "invalid key '" + key + "'");
        if (!is_known_unit(unit)) parse_fail(source, line_no, "unknown unit '" + unit + "' for " + key);
        if (std::any_of(fields.begin(), fields.end(), [&](const Field& f) { return f.key == key; })) {
          parse_fail(source, line_no, "duplicate column '" + key + "'");
        }
        fields.push_back(Field{key, UnitSpec(unit)});
      }
      columns = cells.size();
      continue;
    }

    if (cells.size() != columns) {
      parse_fail(source, line_no,
                 "expected " + std::to_string(columns) + " columns, got " + std::to_string(cells.size()));
    }
    const auto t = parse_double(cells[0]);
    if (!t) parse_fail(source, line_no, "bad time '" + std::string(trim(cells[0])) + "'");
    if (!traj.times.empty() && !(*t > traj.times.back())) {
      throw Error(ErrorKind::non_monotone_time, std::string(source) + ":" + std::to_string(line_no) + ": t=" +
                                                    format_number(*t) + " does not increase past " +
                                                    format_number(traj.times.back()));
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const auto v = parse_double(cells[i + 1]);
      if (!v) {
        parse_fail(source, line_no, "bad value '" + std::string(trim(cells[i + 1])) + "' for " + fields[i].key);
      }
      row.push_back(*v);
    }
    if (has_stale) {
      const auto s = trim(cells.back());
      if (s != "0" && s != "1") parse_fail(source, line_no, "stale column must be 0 or 1");
    }
    traj.times.push_back(*t);
    traj.rows.push_back(std::move(row));
  }
  if (!header_seen) parse_fail(source, 1, "empty trajectory");
  traj.schema = Schema::from_fields("trajectory", std::move(fields));
  return traj;
}

Trajectory load_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io_error, "cannot read trajectory " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_trajectory(ss.str(), path.string());
}

DefRecord sample(const Trajectory& traj, double t) {
  if (!(t >= 0)) throw Error(ErrorKind::invalid_argument, "trajectory sampled at negative t");
  const auto it = std::upper_bound(traj.times.begin(), traj.times.end(), t);
  if (it == traj.times.begin()) return make_record(traj.schema).with_timestamp(t);
  const auto i = static_cast<std::size_t>(it - traj.times.begin()) - 1;
  return with_values(traj.schema, traj.rows[i]).with_timestamp(t);
}

void check_trajectory(const Trajectory& traj, const RobotDefinition& def) {
  const auto& input = def.input_schema();
  std::string problems;
  for (const auto& f : traj.schema.fields()) {
    if (!input.contains(f.key)) {
      problems += " '" + f.key + "' is not an input of " + def.name() + ";";
    } else if (input.field(f.key).spec.dimension() != f.spec.dimension()) {
      problems += " '" + f.key + "[" + f.spec.unit_name() + "]' has the wrong dimension for " + def.name() + ";";
    }
  }
  if (!problems.empty()) {
    problems.pop_back();
    throw Error(ErrorKind::schema_mismatch, "trajectory does not fit:" + problems);
  }
}

void TrajectoryInput::setup(const std::vector<RobotInfo>& robots) {
  for (const auto& r : robots) check_trajectory(traj_, r.definition);
}

std::optional<DefRecord> TrajectoryInput::sample(double t, const RobotInfo&) { return rems::sample(traj_, t); }

}  // namespace rems
