#include "rems/error.hpp"

namespace rems {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::unknown_key: return "UnknownKey";
    case ErrorKind::unknown_unit: return "UnknownUnit";
    case ErrorKind::dimension_mismatch: return "DimensionMismatch";
    case ErrorKind::range_violation: return "RangeViolation";
    case ErrorKind::key_collision: return "KeyCollision";
    case ErrorKind::invalid_argument: return "InvalidArgument";
    case ErrorKind::schema_mismatch: return "SchemaMismatch";
    case ErrorKind::nonholonomic_violation: return "NonholonomicViolation";
    case ErrorKind::dof_mismatch: return "DofMismatch";
    case ErrorKind::outside_arena: return "OutsideArena";
    case ErrorKind::not_initialized: return "NotInitialized";
    case ErrorKind::malformed_frame: return "MalformedFrame";
    case ErrorKind::schema_hash_mismatch: return "SchemaHashMismatch";
    case ErrorKind::connection_lost: return "ConnectionLost";
    case ErrorKind::schema_incompatible: return "SchemaIncompatible";
    case ErrorKind::run_already_started: return "RunAlreadyStarted";
    case ErrorKind::init_failure: return "InitFailure";
    case ErrorKind::parse_error: return "ParseError";
    case ErrorKind::non_monotone_time: return "NonMonotoneTime";
    case ErrorKind::unknown_profile: return "UnknownProfile";
    case ErrorKind::io_error: return "IoError";
    case ErrorKind::config_error: return "ConfigError";
  }
  return "Error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

}  // namespace rems
