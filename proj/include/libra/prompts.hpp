#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace libra::prompts {

/// Templates start with a "[task: <name>]" line so that deterministic stub
/// backends can tell the tasks apart; real models ignore it.
enum class Task { summarize, allocate, define, judge };

std::string_view to_string(Task task);
std::optional<Task> task_of(std::string_view prompt);

/// A text with {placeholder} slots.
class PromptTemplate {
public:
    explicit PromptTemplate(std::string text);

    /// Throws ValidationError if a placeholder in the text has no value.
    std::string fill(const std::map<std::string, std::string>& values) const;
    const std::string& text() const noexcept { return text_; }

private:
    std::string text_;
};

PromptTemplate builtin(Task task);
/// Reads `file` when given and present, else the built-in template.
PromptTemplate load(Task task, const std::optional<std::filesystem::path>& file);

/// Value of the first line starting with `key` ("Word:"), trimmed.
std::optional<std::string> field(std::string_view prompt, std::string_view key);
/// Collapses runs of whitespace (including newlines) to single spaces.
std::string flatten(std::string_view text);

}  // namespace libra::prompts
