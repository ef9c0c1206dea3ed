#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "json.hpp"

namespace libra {

using Json = nlohmann::ordered_json;

namespace utf8 {

std::vector<char32_t> decode(std::string_view text);
void append(std::string& out, char32_t cp);
std::string encode(std::u32string_view cps);

bool is_space(char32_t cp);
/// Letters of any script, including macronized vowels. ASCII digits are not letters.
bool is_letter(char32_t cp);
bool is_digit(char32_t cp);
char32_t to_lower(char32_t cp);
char32_t to_upper(char32_t cp);
std::string lower(std::string_view text);
/// Uppercases the first code point only.
std::string capitalize(std::string_view text);
bool starts_upper(std::string_view text);

}  // namespace utf8

std::string trim(std::string_view text);
std::vector<std::string> split(std::string_view text, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);
std::uint64_t fnv1a64(std::string_view data);
std::uint64_t splitmix64(std::uint64_t x);
/// Maps a 64-bit hash to a double in [0, 1).
double unit_interval(std::uint64_t h);

std::string read_file(const std::filesystem::path& path);
/// Writes through a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::vector<std::string> read_lines(const std::filesystem::path& path);
/// One entry per non-empty, non-comment (#) line, trimmed.
std::vector<std::string> read_word_list(const std::filesystem::path& path);

Json read_json_file(const std::filesystem::path& path);

struct JsonlIssue {
    std::size_t line = 0;
    std::string message;
};

/// Calls `on_record` for every parsable line. Malformed lines are collected,
/// not thrown, so callers decide whether they are fatal.
std::vector<JsonlIssue> read_jsonl(const std::filesystem::path& path,
                                   const std::function<void(std::size_t, const Json&)>& on_record);
std::string to_jsonl(const std::vector<Json>& records);

std::string utc_timestamp();

/// Runs `body(i)` for i in [0, n) on at most `workers` threads. The first
/// exception thrown by any call is rethrown after all workers stop.
template <class Body>
void parallel_for(std::size_t n, std::size_t workers, Body&& body) {
    if (n == 0) return;
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (;;) {
                    if (failed.load()) return;
                    const std::size_t i = next.fetch_add(1);
                    if (i >= n) return;
                    try {
                        body(i);
                    } catch (...) {
                        std::lock_guard lock(error_mutex);
                        if (!first_error) first_error = std::current_exception();
                        failed.store(true);
                    }
                }
            });
        }
    }
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace libra
