#include "rems/backends/bridge_protocol.hpp"

#include <cmath>
#include <json.hpp>

#include "rems/robotdefs/definition.hpp"

namespace rems {
namespace {

using json = nlohmann::ordered_json;

constexpr std::pair<BridgeType, std::string_view> kTypes[] = {
    {BridgeType::hello, "hello"},
    {BridgeType::drive, "drive"},
    {BridgeType::sense_request, "sense_request"},
    {BridgeType::sense_reply, "sense_reply"},
    {BridgeType::observe_reply, "observe_reply"},
    {BridgeType::bye, "bye"},
};

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorKind::malformed_frame, what); }

}  // namespace

std::string_view to_string(BridgeType t) noexcept {
  for (const auto& [type, name] : kTypes) {
    if (type == t) return name;
  }
  return "?";
}

std::string bridge_encode(const BridgeMessage& msg) {
  json j;
  j["type"] = to_string(msg.type);
  j["t"] = msg.t;
  j["seq"] = msg.seq;
  json data = json::array();
  for (const auto& e : msg.data) {
    if (!std::isfinite(e.value)) malformed("non-finite value for " + e.key);
    data.push_back(json::array({e.key, e.value, e.unit}));
  }
  j["data"] = std::move(data);
  if (msg.protocol) j["protocol"] = *msg.protocol;
  if (msg.definition) j["definition"] = *msg.definition;
  if (msg.schema_hash) {
    j["schema_hash"] = {{"input", msg.schema_hash->input},
                        {"state", msg.schema_hash->state},
                        {"output", msg.schema_hash->output}};
  }
  if (msg.reason) j["reason"] = *msg.reason;
  return j.dump();
}

BridgeMessage bridge_decode(std::string_view frame) {
  json j;
  try {
    j = json::parse(frame);
  } catch (const json::parse_error& e) {
    malformed(std::string("not JSON: ") + e.what());
  }
  if (!j.is_object()) malformed("frame must be a JSON object");
  BridgeMessage msg;

  const auto type = j.find("type");
  if (type == j.end() || !type->is_string()) malformed("missing \"type\"");
  const auto name = type->get<std::string>();
  bool known = false;
  for (const auto& [t, n] : kTypes) {
    if (n == name) {
      msg.type = t;
      known = true;
    }
  }
  if (!known) malformed("unknown frame type \"" + name + "\"");

  const auto t = j.find("t");
  if (t == j.end() || !t->is_number()) malformed("missing numeric \"t\"");
  msg.t = t->get<double>();
  const auto seq = j.find("seq");
  if (seq == j.end() || !seq->is_number_unsigned()) malformed("missing non-negative integer \"seq\"");
  msg.seq = seq->get<std::uint64_t>();

  const auto data = j.find("data");
  if (data == j.end() || !data->is_array()) malformed("missing \"data\" array");
  for (const auto& e : *data) {
    if (!e.is_array() || e.size() != 3 || !e[0].is_string() || !e[1].is_number() || !e[2].is_string()) {
      malformed("data entries must be [key, number, unit]");
    }
    FlatEntry entry{e[0].get<std::string>(), e[1].get<double>(), e[2].get<std::string>()};
    if (!is_known_unit(entry.unit)) malformed("unknown unit \"" + entry.unit + "\" for " + entry.key);
    msg.data.push_back(std::move(entry));
  }

  auto opt_string = [&](const char* key, std::optional<std::string>& out) {
    const auto it = j.find(key);
    if (it == j.end()) return;
    if (!it->is_string()) malformed(std::string("\"") + key + "\" must be a string");
    out = it->get<std::string>();
  };
  opt_string("protocol", msg.protocol);
  opt_string("definition", msg.definition);
  opt_string("reason", msg.reason);
  if (const auto h = j.find("schema_hash"); h != j.end()) {
    if (!h->is_object()) malformed("\"schema_hash\" must be an object");
    SchemaHashes hashes;
    for (auto [key, out] : {std::pair{"input", &hashes.input}, {"state", &hashes.state}, {"output", &hashes.output}}) {
      const auto it = h->find(key);
      if (it == h->end() || !it->is_string()) malformed(std::string("schema_hash.") + key + " must be a string");
      *out = it->get<std::string>();
    }
    msg.schema_hash = std::move(hashes);
  }
  return msg;
}

SchemaHashes schema_hashes(const RobotDefinition& def) {
  return {def.input_schema().hash(), def.state_schema().hash(), def.output_schema().hash()};
}

}  // namespace rems
