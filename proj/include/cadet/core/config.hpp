#pragma once

#include <json.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace cadet {

using Json = nlohmann::json;

/// Reads a JSON config file. Throws ConfigError on I/O or syntax problems.
Json load_config(const std::filesystem::path& path);

/// Applies one `dotted.key=value` override in place. The value is parsed as
/// JSON when possible (numbers, booleans, arrays) and taken as a string
/// otherwise. Intermediate objects are created as needed.
void apply_override(Json& config, std::string_view assignment);

void apply_overrides(Json& config, const std::vector<std::string>& assignments);

/// Recursively merges `patch` into `base`; objects merge, everything else replaces.
void merge_into(Json& base, const Json& patch);

/// Writes `config` pretty-printed to `path`, creating parent directories.
void write_config(const Json& config, const std::filesystem::path& path);

}  // namespace cadet
