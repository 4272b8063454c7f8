#pragma once

#include "cadet/core/config.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cadet {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitUserError = 1, kExitInternalError = 2 };

/// Config file (optional) + `key=value` overrides + optional seed, which is
/// copied into every section that takes one.
Json effective_config(const std::string& config_path, const std::vector<std::string>& overrides,
                      std::optional<std::uint64_t> seed);

/// Entry point shared by the binary and the tests.
int run_cli(int argc, const char* const* argv);

}  // namespace cadet
