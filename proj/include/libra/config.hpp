#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "libra/util.hpp"

namespace libra::config {

/// Every key with its default. A user config may only use these keys; keys
/// whose default is null take the type listed in nullable_types().
const Json& defaults();

/// Dotted key -> "string" | "number" | "array" for keys whose default is null.
const std::map<std::string, std::string>& nullable_types();

/// Returns every violation (unknown keys, wrong types, out-of-range values).
std::vector<std::string> validate(const Json& user);

/// Overlays `user` onto the defaults after validating it; throws
/// ValidationError listing every violation.
Json merge(const Json& user);

/// "a.b.c=value"; the value is parsed as JSON when possible, else taken as a string.
void apply_override(Json& user, std::string_view assignment);

struct RunConfig {
    Json values;                    // fully merged
    std::filesystem::path base_dir; // relative paths resolve against this

    /// Value at a dotted key ("scoring.max_in_flight").
    const Json& at(std::string_view dotted) const;
    /// Resolved path for a string key, nullopt for null. "@data/..." resolves into the bundled data directory.
    std::optional<std::filesystem::path> path(std::string_view dotted) const;
    std::filesystem::path output_dir() const;
    std::uint64_t seed() const;
    /// sha256 of the merged config, for manifests.
    std::string hash() const;
};

/// Loads `file` (or only defaults when absent), applies overrides, validates.
RunConfig load(const std::optional<std::filesystem::path>& file, const std::vector<std::string>& overrides = {});

std::filesystem::path data_dir();

}  // namespace libra::config
