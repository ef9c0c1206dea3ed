#include "libra/prompts.hpp"

#include "libra/errors.hpp"
#include "libra/util.hpp"

namespace libra::prompts {

namespace {

constexpr std::string_view kSummarize =
    "[task: summarize]\n"
    "Update this summary with the new passage. Keep the topics, people and social groups it discusses. "
    "Reply with the updated summary only.\n"
    "Current summary: {summary}\n"
    "New passage: {passage}\n";

constexpr std::string_view kAllocate =
    "[task: allocate]\n"
    "Which of these social groups does the summary below discuss? Groups: {groups}.\n"
    "Reply with a comma-separated list of group names from that list, or nothing if none apply.\n"
    "Summary: {summary}\n";

constexpr std::string_view kDefine =
    "[task: define]\n"
    "Read the sentence and explain what the word means in it. Reply with a short dictionary-style definition.\n"
    "Sentence: {sentence}\n"
    "Word: {word}\n";

constexpr std::string_view kJudge =
    "[task: judge]\n"
    "Do these two definitions describe the same meaning? Answer strictly YES or NO.\n"
    "Definition A: {definition_a}\n"
    "Definition B: {definition_b}\n";

}  // namespace

std::string_view to_string(Task task) {
    switch (task) {
        case Task::summarize: return "summarize";
        case Task::allocate: return "allocate";
        case Task::define: return "define";
        case Task::judge: return "judge";
    }
    return "";
}

std::optional<Task> task_of(std::string_view prompt) {
    constexpr std::string_view tag = "[task: ";
    const auto pos = prompt.find(tag);
    if (pos == std::string_view::npos) return std::nullopt;
    const auto end = prompt.find(']', pos);
    if (end == std::string_view::npos) return std::nullopt;
    const auto name = prompt.substr(pos + tag.size(), end - pos - tag.size());
    for (Task t : {Task::summarize, Task::allocate, Task::define, Task::judge})
        if (to_string(t) == name) return t;
    return std::nullopt;
}

PromptTemplate::PromptTemplate(std::string text) : text_(std::move(text)) {}

std::string PromptTemplate::fill(const std::map<std::string, std::string>& values) const {
    std::string out;
    std::size_t pos = 0;
    while (pos < text_.size()) {
        const auto open = text_.find('{', pos);
        if (open == std::string::npos) break;
        const auto close = text_.find('}', open);
        if (close == std::string::npos) break;
        const auto name = text_.substr(open + 1, close - open - 1);
        out.append(text_, pos, open - pos);
        const auto it = values.find(name);
        if (it == values.end()) throw ValidationError("prompt placeholder {" + name + "} has no value");
        out += it->second;
        pos = close + 1;
    }
    out.append(text_, pos, std::string::npos);
    return out;
}

PromptTemplate builtin(Task task) {
    switch (task) {
        case Task::summarize: return PromptTemplate(std::string(kSummarize));
        case Task::allocate: return PromptTemplate(std::string(kAllocate));
        case Task::define: return PromptTemplate(std::string(kDefine));
        case Task::judge: return PromptTemplate(std::string(kJudge));
    }
    return PromptTemplate("");
}

PromptTemplate load(Task task, const std::optional<std::filesystem::path>& file) {
    if (file && std::filesystem::exists(*file)) return PromptTemplate(read_file(*file));
    if (file) throw ValidationError("prompt template not found: " + file->string());
    return builtin(task);
}

std::optional<std::string> field(std::string_view prompt, std::string_view key) {
    for (const auto& line : split(prompt, '\n')) {
        if (line.rfind(key, 0) == 0) return trim(std::string_view(line).substr(key.size()));
    }
    return std::nullopt;
}

std::string flatten(std::string_view text) {
    std::string out;
    bool space = false;
    for (char c : text) {
        if (c == ' ' || c == '\n' || c == '\t' || c == '\r') {
            space = !out.empty();
            continue;
        }
        if (space) out.push_back(' ');
        space = false;
        out.push_back(c);
    }
    return out;
}

}  // namespace libra::prompts
