#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "rems/robotdefs/definition.hpp"

namespace rems {

/// create2, woodbot, epuck, pioneer3dx, pioneer3at, moose, omnibase, arm5,
/// and omnibase+arm (the merge of omnibase and arm5).
std::vector<std::string> builtin_definition_names();
bool is_builtin_definition(std::string_view name);
/// Throws UnknownKey listing the valid names.
RobotDefinition builtin_definition(std::string_view name);

}  // namespace rems
