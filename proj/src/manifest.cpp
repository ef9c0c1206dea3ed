#include "libra/manifest.hpp"

#include <fstream>

#include "libra/errors.hpp"

namespace libra::manifest {

Json to_json(const Entry& e) {
    return Json{{"command", e.command},       {"config_sha256", e.config_sha256}, {"inputs", e.inputs},
                {"outputs", e.outputs},       {"counts", e.counts},               {"duration_ms", e.duration_ms}};
}

Entry entry_from_json(const Json& j) {
    Entry e;
    e.command = j.at("command").get<std::string>();
    e.config_sha256 = j.at("config_sha256").get<std::string>();
    e.inputs = j.at("inputs").get<FileHashes>();
    e.outputs = j.at("outputs").get<FileHashes>();
    e.counts = j.value("counts", Json::object());
    e.duration_ms = j.value("duration_ms", std::int64_t{0});
    return e;
}

std::string display_path(const std::filesystem::path& file, const std::filesystem::path& base) {
    const auto abs_file = std::filesystem::weakly_canonical(std::filesystem::absolute(file));
    const auto abs_base = std::filesystem::weakly_canonical(std::filesystem::absolute(base));
    const auto rel = abs_file.lexically_relative(abs_base);
    if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
    return abs_file.generic_string();
}

FileHashes hash_files(const std::vector<std::filesystem::path>& files, const std::filesystem::path& base) {
    FileHashes out;
    for (const auto& f : files) {
        if (!std::filesystem::is_regular_file(f)) continue;
        out[display_path(f, base)] = sha256_file(f);
    }
    return out;
}

Manifest::Manifest(std::filesystem::path file) : file_(std::move(file)) {}

std::vector<Entry> Manifest::entries() const {
    std::vector<Entry> out;
    if (!std::filesystem::exists(file_)) return out;
    const auto issues = read_jsonl(file_, [&](std::size_t, const Json& j) { out.push_back(entry_from_json(j)); });
    if (!issues.empty())
        throw ValidationError(file_.string() + ":" + std::to_string(issues.front().line) + ": " + issues.front().message);
    return out;
}

std::optional<Entry> Manifest::last(std::string_view command) const {
    std::optional<Entry> found;
    for (auto& e : entries())
        if (e.command == command) found = std::move(e);
    return found;
}

void Manifest::append(const Entry& entry) const {
    std::filesystem::create_directories(file_.parent_path());
    std::ofstream out(file_, std::ios::app | std::ios::binary);
    if (!out) throw Error("cannot append to " + file_.string());
    out << to_json(entry).dump() << '\n';
}

bool Manifest::up_to_date(std::string_view command, const std::string& config_sha256, const FileHashes& inputs,
                          const std::filesystem::path& base) const {
    const auto prev = last(command);
    if (!prev || prev->config_sha256 != config_sha256 || prev->inputs != inputs || prev->outputs.empty()) return false;
    for (const auto& [path, sha] : prev->outputs) {
        std::filesystem::path p(path);
        if (p.is_relative()) p = base / p;
        if (!std::filesystem::is_regular_file(p) || sha256_file(p) != sha) return false;
    }
    return true;
}

std::vector<std::string> Manifest::verify(const std::filesystem::path& base) const {
    std::map<std::string, std::string> latest;
    for (const auto& e : entries())
        for (const auto& [path, sha] : e.outputs) latest[path] = sha;
    std::vector<std::string> problems;
    for (const auto& [path, sha] : latest) {
        std::filesystem::path p(path);
        if (p.is_relative()) p = base / p;
        if (!std::filesystem::is_regular_file(p)) problems.push_back(path + ": recorded but missing");
        else if (sha256_file(p) != sha) problems.push_back(path + ": changed since it was recorded");
    }
    return problems;
}

}  // namespace libra::manifest
