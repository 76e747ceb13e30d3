#include "rems/defrecord/mapping.hpp"

#include <algorithm>
#include <map>
#include <mutex>

#include "rems/error.hpp"

namespace rems {
namespace {

struct Registry {
  std::mutex mutex;
  std::map<std::string, CustomFunction, std::less<>> functions;
};

Registry& registry() {
  static Registry r;
  return r;
}

CustomFunction find_custom(std::string_view name) {
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  auto it = r.functions.find(name);
  if (it == r.functions.end()) {
    throw Error(ErrorKind::unknown_key, "no custom mapping named '" + std::string(name) + "'");
  }
  return it->second;
}

double lookup_value(const LookupMap& map, double x) {
  const auto& bp = map.breakpoints;
  if (x <= bp.front().first) return bp.front().second;
  if (x >= bp.back().first) return bp.back().second;
  auto upper = std::upper_bound(bp.begin(), bp.end(), x, [](double v, const auto& p) { return v < p.first; });
  auto lower = std::prev(upper);
  if (map.interpolation == Interpolation::hold) return lower->second;
  const double w = (x - lower->first) / (upper->first - lower->first);
  return lower->second + w * (upper->second - lower->second);
}

}  // namespace

void register_custom_mapping(std::string name, CustomFunction fn) {
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  r.functions[std::move(name)] = std::move(fn);
}

bool has_custom_mapping(std::string_view name) {
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  return r.functions.find(name) != r.functions.end();
}

MappingRule::MappingRule(std::vector<std::string> sources, std::vector<std::string> targets, Kind kind)
    : sources_(std::move(sources)), targets_(std::move(targets)), kind_(std::move(kind)) {
  if (sources_.empty() || targets_.empty()) {
    throw Error(ErrorKind::invalid_argument, "mapping rule needs at least one source and one target");
  }
}

MappingRule MappingRule::linear(std::vector<std::string> sources, std::vector<std::string> targets, double gain,
                                double offset) {
  const auto n = static_cast<Eigen::Index>(sources.size());
  const auto m = static_cast<Eigen::Index>(targets.size());
  Eigen::MatrixXd gains;
  if (n == 1) {
    gains = Eigen::MatrixXd::Constant(m, 1, gain);
  } else if (n == m) {
    gains = gain * Eigen::MatrixXd::Identity(m, n);
  } else {
    throw Error(ErrorKind::invalid_argument, "scalar linear rule needs one source or as many sources as targets");
  }
  return affine(std::move(sources), std::move(targets), std::move(gains), Eigen::VectorXd::Constant(m, offset));
}

MappingRule MappingRule::affine(std::vector<std::string> sources, std::vector<std::string> targets,
                                Eigen::MatrixXd gains, Eigen::VectorXd offsets) {
  if (gains.rows() != static_cast<Eigen::Index>(targets.size()) ||
      gains.cols() != static_cast<Eigen::Index>(sources.size()) || offsets.size() != gains.rows()) {
    throw Error(ErrorKind::invalid_argument, "affine rule shape does not match its keys");
  }
  if (!gains.allFinite() || !offsets.allFinite()) {
    throw Error(ErrorKind::invalid_argument, "affine rule coefficients must be finite");
  }
  return MappingRule(std::move(sources), std::move(targets), LinearMap{std::move(gains), std::move(offsets)});
}

MappingRule MappingRule::lookup(std::string source, std::vector<std::string> targets,
                                std::vector<std::pair<double, double>> breakpoints, Interpolation interpolation) {
  if (breakpoints.empty()) throw Error(ErrorKind::invalid_argument, "lookup table is empty");
  for (std::size_t i = 1; i < breakpoints.size(); ++i) {
    if (!(breakpoints[i].first > breakpoints[i - 1].first)) {
      throw Error(ErrorKind::invalid_argument, "lookup breakpoints must be strictly increasing");
    }
  }
  return MappingRule({std::move(source)}, std::move(targets), LookupMap{std::move(breakpoints), interpolation});
}

MappingRule MappingRule::broadcast(std::string source, std::vector<std::string> targets) {
  return MappingRule({std::move(source)}, std::move(targets), BroadcastMap{});
}

MappingRule MappingRule::custom(std::vector<std::string> sources, std::vector<std::string> targets,
                                std::string function) {
  return MappingRule(std::move(sources), std::move(targets), CustomMap{std::move(function)});
}

MappingRule MappingRule::saturating(bool on) const {
  MappingRule out = *this;
  out.saturating_ = on;
  return out;
}

std::vector<double> MappingRule::apply(std::span<const double> sources) const {
  if (sources.size() != sources_.size()) {
    throw Error(ErrorKind::invalid_argument, "rule expects " + std::to_string(sources_.size()) + " sources");
  }
  const std::size_t m = targets_.size();
  if (const auto* lin = std::get_if<LinearMap>(&kind_)) {
    Eigen::Map<const Eigen::VectorXd> x(sources.data(), static_cast<Eigen::Index>(sources.size()));
    Eigen::VectorXd y = lin->gains * x + lin->offsets;
    return {y.data(), y.data() + y.size()};
  }
  if (const auto* table = std::get_if<LookupMap>(&kind_)) {
    return std::vector<double>(m, lookup_value(*table, sources[0]));
  }
  if (std::holds_alternative<BroadcastMap>(kind_)) {
    return std::vector<double>(m, sources[0]);
  }
  const auto& custom_map = std::get<CustomMap>(kind_);
  std::vector<double> out = find_custom(custom_map.function)(sources);
  if (out.size() != m) {
    throw Error(ErrorKind::invalid_argument, "custom mapping '" + custom_map.function + "' returned " +
                                                 std::to_string(out.size()) + " values, expected " +
                                                 std::to_string(m));
  }
  return out;
}

DefRecord bind_record(const DefRecord& target, const DefRecord& source, std::span<const MappingRule> rules) {
  const Schema& ts = target.schema();
  const Schema& ss = source.schema();
  std::vector<bool> ruled(ts.size(), false);
  for (const auto& rule : rules) {
    for (const auto& k : rule.source_keys()) {
      if (!ss.contains(k)) throw Error(ErrorKind::unknown_key, "rule source '" + k + "' not in source schema");
    }
    for (const auto& k : rule.target_keys()) {
      auto idx = ts.index_of(k);
      if (!idx) throw Error(ErrorKind::unknown_key, "rule target '" + k + "' not in target schema");
      ruled[*idx] = true;
    }
  }

  std::vector<double> values(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const Field& f = ts.field(i);
    if (ruled[i]) {
      values[i] = f.spec.initial_value();
    } else if (auto idx = ss.index_of(f.key)) {
      values[i] = convert_unit(source.at(*idx), ss.field(*idx).spec, f.spec);
    } else {
      values[i] = f.spec.initial_value();
    }
  }

  std::vector<double> inputs;
  for (const auto& rule : rules) {
    inputs.clear();
    for (const auto& k : rule.source_keys()) inputs.push_back(source[k]);
    std::vector<double> outputs = rule.apply(inputs);
    const bool is_broadcast = std::holds_alternative<BroadcastMap>(rule.kind());
    for (std::size_t j = 0; j < outputs.size(); ++j) {
      const std::size_t idx = *ts.index_of(rule.target_keys()[j]);
      const Field& f = ts.field(idx);
      double v = outputs[j];
      if (is_broadcast) v = convert_unit(v, ss.field(rule.source_keys()[0]).spec, f.spec);
      if (rule.is_saturating() && f.spec.range()) v = f.spec.range()->clamp(v);
      values[idx] = v;
    }
  }
  return with_values(ts, std::move(values)).with_timestamp(source.timestamp()).with_stale(source.stale());
}

}  // namespace rems
