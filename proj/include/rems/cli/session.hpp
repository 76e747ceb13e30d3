#pragma once

#include <memory>
#include <string>

#include "rems/cli/config.hpp"
#include "rems/iosys/telemetry.hpp"
#include "rems/iosys/teleop.hpp"
#include "rems/runtime/runtime.hpp"

namespace rems {

enum class SessionMode { run, serve };

/// A runtime wired up from a RunConfig: backends, inputs, log writers and,
/// when any robot uses teleop or broadcast, the /ws endpoint.
class Session {
 public:
  /// serve requires a teleop input or broadcast output (ConfigError) and
  /// defaults realtime_factor to 1 when the config leaves it unset.
  /// Throws IoError when the endpoint cannot bind.
  Session(const RunConfig& config, SessionMode mode);
  ~Session();

  Runtime& runtime() noexcept { return *runtime_; }
  TelemetryServer* server() noexcept { return server_.get(); }
  const std::shared_ptr<TeleopHub>& teleop() const noexcept { return teleop_; }

  /// Throws InitFailure.
  RunReport run();

 private:
  std::shared_ptr<TeleopHub> teleop_;
  std::shared_ptr<TelemetryServer> server_;
  std::unique_ptr<Runtime> runtime_;
};

/// 0 clean, 2 when any robot ended stale or failed.
int exit_code(const RunReport& report);
/// Human-readable summary for the terminal.
std::string summary_text(const RunReport& report);

}  // namespace rems
