#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rems/backends/bridge.hpp"
#include "rems/backends/device_profile.hpp"
#include "rems/iosys/trajectory.hpp"
#include "rems/robotdefs/definition.hpp"
#include "rems/runtime/runtime.hpp"

namespace rems {

enum class ImplementationKind { analytical, emulated, bridge };
enum class InputKind { none, trajectory, teleop };

struct RobotConfig {
  std::string id;
  std::string definition_ref;
  RobotDefinition definition;
  std::string implementation;  // as written, e.g. "emulated:woodbot"
  ImplementationKind kind = ImplementationKind::analytical;
  DeviceProfile profile;   // emulated
  BridgeEndpoint endpoint;  // bridge
  InputKind input = InputKind::none;
  std::filesystem::path trajectory_path;
  std::optional<Trajectory> trajectory;
  std::vector<std::filesystem::path> log_dirs;  // resolved
  bool broadcast = false;
  bool implementation_first = false;
};

struct RunConfig {
  std::filesystem::path source;
  RunOptions run;
  bool realtime_factor_set = false;
  std::string bind_host = "127.0.0.1";
  std::uint16_t bind_port = 8765;
  double broadcast_rate = 20.0;
  std::vector<RobotConfig> robots;

  bool wants_endpoint() const noexcept;
};

/// One `key=value` override. Keys are dot-paths into the config:
/// `run.dt`, bare run keys (`dt`), `robot.<id or index>.<field>`,
/// `profiles.<name>.<field>`. Values parse as TOML values, else as strings.
struct Override {
  std::string key;
  std::string value;

  /// Throws ConfigError when there is no '='.
  static Override parse(std::string_view text);
};

/// Parses and resolves everything a run needs: definitions, profiles,
/// trajectories, bridge URLs, output paths. Every problem found is collected
/// and thrown together as one ConfigError (ParseError for TOML syntax).
/// Relative paths resolve against the config file's directory; log
/// directories resolve under run.out.
RunConfig parse_config(const std::filesystem::path& path, const std::vector<Override>& overrides = {});
RunConfig parse_config_text(std::string_view toml_text, std::string_view source_name,
                            const std::filesystem::path& base_dir, const std::vector<Override>& overrides = {});

/// "host:port"; throws ConfigError.
std::pair<std::string, std::uint16_t> parse_bind(std::string_view text);

}  // namespace rems
