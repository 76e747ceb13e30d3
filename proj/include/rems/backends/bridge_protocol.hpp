#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rems/defrecord/record.hpp"

namespace rems {

inline constexpr std::string_view kBridgeProtocol = "rems-bridge/1";

enum class BridgeType { hello, drive, sense_request, sense_reply, observe_reply, bye };
std::string_view to_string(BridgeType t) noexcept;

struct SchemaHashes {
  std::string input;
  std::string state;
  std::string output;

  bool operator==(const SchemaHashes&) const = default;
};

/// One frame of the bridge protocol. Replies carry the seq of the request
/// they answer. hello adds protocol, definition and schema_hash; bye may
/// carry a reason.
struct BridgeMessage {
  BridgeType type = BridgeType::hello;
  double t = 0.0;
  std::uint64_t seq = 0;
  std::vector<FlatEntry> data;
  std::optional<std::string> protocol;
  std::optional<std::string> definition;
  std::optional<SchemaHashes> schema_hash;
  std::optional<std::string> reason;

  bool operator==(const BridgeMessage&) const = default;
};

/// {"type":..,"t":..,"seq":..,"data":[[key,value,unit],...]} plus the hello/bye
/// extras.
std::string bridge_encode(const BridgeMessage& msg);
/// Throws MalformedFrame.
BridgeMessage bridge_decode(std::string_view frame);

SchemaHashes schema_hashes(const class RobotDefinition& def);

}  // namespace rems
