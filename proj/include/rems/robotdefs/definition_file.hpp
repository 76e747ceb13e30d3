#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "rems/robotdefs/definition.hpp"

namespace rems {

/// Parses a TOML robot definition document:
///
///   name = "wide-woodbot"
///   extends = "woodbot"            # or: merge = ["omnibase", "arm5"]
///   [params]                       # kind = diffdrive | mecanum | arm
///   track_width = 0.12
///   [input]
///   "wh.l" = { unit = "rpm", range = [-120, 120] }
///   [state] / [output]             # same shape as [input]
///   [rules]
///   links = [{ master = "wh.l", slaves = ["wh.l2"], gains = [1.0] }]
///
/// Relative refs in `extends`/`merge` resolve against `base_dir`.
/// Throws ParseError (with line) or ConfigError.
RobotDefinition parse_definition(std::string_view toml_text, std::string_view source_name,
                                 const std::filesystem::path& base_dir = {});
RobotDefinition load_definition_file(const std::filesystem::path& path);

/// A built-in name, or a path to a definition file.
RobotDefinition resolve_definition(std::string_view ref, const std::filesystem::path& base_dir = {});

}  // namespace rems
