#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rems {

enum class ErrorKind {
  unknown_key,
  unknown_unit,
  dimension_mismatch,
  range_violation,
  key_collision,
  invalid_argument,
  schema_mismatch,
  nonholonomic_violation,
  dof_mismatch,
  outside_arena,
  not_initialized,
  malformed_frame,
  schema_hash_mismatch,
  connection_lost,
  schema_incompatible,
  run_already_started,
  init_failure,
  parse_error,
  non_monotone_time,
  unknown_profile,
  io_error,
  config_error,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// The single exception type thrown by the framework. Callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace rems
