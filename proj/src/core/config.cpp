#include "cadet/core/config.hpp"

#include "cadet/error.hpp"

#include <fstream>

namespace cadet {

Json load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    try {
        return Json::parse(in, nullptr, true, true);
    } catch (const Json::parse_error& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
}

void apply_override(Json& config, std::string_view assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) {
        throw ConfigError("override must look like key=value: " + std::string(assignment));
    }
    const std::string key(assignment.substr(0, eq));
    const std::string raw(assignment.substr(eq + 1));

    Json value;
    try {
        value = Json::parse(raw);
    } catch (const Json::parse_error&) {
        value = raw;
    }

    Json* node = &config;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError("empty key segment in override: " + key);
        if (!node->is_object()) {
            if (!node->is_null()) throw ConfigError("override path crosses a non-object at '" + part + "'");
            *node = Json::object();
        }
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        node = &(*node)[part];
        start = dot + 1;
    }
}

void apply_overrides(Json& config, const std::vector<std::string>& assignments)
{
    for (const auto& a : assignments) apply_override(config, a);
}

void merge_into(Json& base, const Json& patch)
{
    if (!patch.is_object() || !base.is_object()) {
        base = patch;
        return;
    }
    for (auto it = patch.begin(); it != patch.end(); ++it) {
        if (base.contains(it.key())) {
            merge_into(base[it.key()], it.value());
        } else {
            base[it.key()] = it.value();
        }
    }
}

void write_config(const Json& config, const std::filesystem::path& path)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write config: " + path.string());
    out << config.dump(2) << '\n';
}

}  // namespace cadet
