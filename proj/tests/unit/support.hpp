#pragma once

#include <doctest.h>

#include <filesystem>
#include <random>
#include <string>

#include "libra/util.hpp"

namespace test {

namespace fs = std::filesystem;

inline fs::path fixture(const std::string& name) { return fs::path(LIBRA_FIXTURES_DIR) / name; }

inline libra::Json fixture_json(const std::string& name) { return libra::read_json_file(fixture(name)); }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = fs::temp_directory_path() / ("libra-test-" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const noexcept { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

inline void write(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    libra::write_file_atomic(path, content);
}

}  // namespace test
