#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "libra/util.hpp"

namespace libra::manifest {

using FileHashes = std::map<std::string, std::string>;  // display path -> sha256

struct Entry {
    std::string command;
    std::string config_sha256;
    FileHashes inputs;
    FileHashes outputs;
    Json counts = Json::object();
    std::int64_t duration_ms = 0;
};

Json to_json(const Entry& e);
Entry entry_from_json(const Json& j);

/// Paths under `base` are recorded relative to it.
std::string display_path(const std::filesystem::path& file, const std::filesystem::path& base);

/// Hashes of the files that exist; missing files are left out.
FileHashes hash_files(const std::vector<std::filesystem::path>& files, const std::filesystem::path& base);

/// Append-only manifest.jsonl.
class Manifest {
public:
    explicit Manifest(std::filesystem::path file);

    const std::filesystem::path& file() const noexcept { return file_; }
    std::vector<Entry> entries() const;
    std::optional<Entry> last(std::string_view command) const;
    void append(const Entry& entry) const;

    /// True when the latest entry for `command` used the same config and
    /// inputs and all of its outputs still hash as recorded.
    bool up_to_date(std::string_view command, const std::string& config_sha256, const FileHashes& inputs,
                    const std::filesystem::path& base) const;

    /// Problems with the chain: outputs whose current hash is not recorded
    /// by the latest entry that wrote them.
    std::vector<std::string> verify(const std::filesystem::path& base) const;

private:
    std::filesystem::path file_;
};

}  // namespace libra::manifest
