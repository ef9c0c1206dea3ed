#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "libra/util.hpp"

namespace libra::corpus {

enum class Source { text, oral };

std::string_view to_string(Source source);
Source source_from_string(std::string_view name);

struct Article {
    std::string id;
    Source source = Source::text;
    std::string title;
    std::string body;
    std::vector<std::string> tags;

    bool operator==(const Article&) const = default;
};

Json to_json(const Article& article);
Article article_from_json(const Json& j);

// ---------------------------------------------------------------------------
// Tokenizer
//
// Tokens are maximal runs of letters and digits (any script; macronized
// vowels are letters), optionally joined by an apostrophe that sits between
// two word characters ("Māori's" is one token). Every other non-space code
// point is a token of its own. The redaction placeholder "[NAME]" is kept as
// a single token so that redacted text re-tokenizes to the same sequence.

inline constexpr std::string_view kNamePlaceholder = "[NAME]";

struct Token {
    std::string text;
    std::size_t begin = 0;  // byte offsets into the source text
    std::size_t end = 0;
};

std::vector<Token> tokenize_with_offsets(std::string_view text);
std::vector<std::string> tokenize(std::string_view text);
/// Joins tokens with single spaces, except before closing punctuation and
/// after opening brackets.
std::string detokenize(const std::vector<std::string>& tokens);

struct Detokenized {
    std::string text;
    std::vector<std::pair<std::size_t, std::size_t>> spans;  // byte range of each token in `text`
};
Detokenized detokenize_with_offsets(const std::vector<std::string>& tokens);
bool is_word_token(std::string_view token);

struct Sentence {
    std::string article_id;
    std::size_t index = 0;
    std::string text;
    std::vector<std::string> tokens;
    bool redacted = false;

    bool operator==(const Sentence&) const = default;
};

Json to_json(const Sentence& sentence);
Sentence sentence_from_json(const Json& j);

// ---------------------------------------------------------------------------
// Filters

enum class FilterKind { title_pattern, body_pattern, tag };

/// Patterns use the ECMAScript regex dialect and match anywhere in the field
/// (anchor with ^/$ explicitly). Tag rules compare case-insensitively.
class FilterRule {
public:
    FilterRule(FilterKind kind, std::string pattern);

    FilterKind kind() const noexcept { return kind_; }
    const std::string& pattern() const noexcept { return pattern_; }
    bool matches(const Article& article) const;

    static FilterRule from_json(const Json& j);
    Json to_json() const;

private:
    FilterKind kind_;
    std::string pattern_;
    std::regex regex_;
};

// ---------------------------------------------------------------------------
// Store

class ArticleStore {
public:
    ArticleStore() = default;

    /// Throws ValidationError on a duplicate id or an empty body.
    void add(Article article);

    const std::vector<Article>& articles() const noexcept { return articles_; }
    const Article* find(std::string_view id) const;
    std::size_t size() const noexcept { return articles_.size(); }
    bool empty() const noexcept { return articles_.empty(); }

    /// Writes articles.jsonl and manifest.json into `dir`.
    void save(const std::filesystem::path& dir, const Json& manifest_extra = Json::object()) const;
    static ArticleStore load(const std::filesystem::path& dir);

    bool operator==(const ArticleStore& other) const { return articles_ == other.articles_; }

private:
    std::vector<Article> articles_;
    std::unordered_map<std::string, std::size_t> index_;
};

enum class InputFormat { jsonl, dir_of_text };
InputFormat input_format_from_string(std::string_view name);

struct IngestReport {
    std::size_t kept = 0;
    std::size_t dropped = 0;
    std::vector<JsonlIssue> malformed;
    std::map<std::string, std::size_t> dropped_by_rule;
};

struct IngestResult {
    ArticleStore store;
    IngestReport report;
};

/// Reads raw records into a store. Malformed records are reported with their
/// line number and skipped; duplicate ids throw.
IngestResult ingest_articles(const std::filesystem::path& path, InputFormat format,
                             const std::vector<FilterRule>& filters = {});

// ---------------------------------------------------------------------------
// Sentence splitting

/// Rule-based splitter: terminal punctuation ends a sentence unless the word
/// before it is a listed abbreviation. Abbreviations marked `never` (titles
/// such as "dr.") never end a sentence; the rest end one only when the next
/// word is capitalized. Blank lines always separate sentences, and in oral
/// transcripts every line break is a speaker-turn boundary.
class SentenceSplitter {
public:
    SentenceSplitter();  // built-in abbreviation list
    explicit SentenceSplitter(const std::filesystem::path& abbreviation_file);

    std::vector<Sentence> split(const Article& article) const;
    /// Byte ranges of sentences within `body`.
    std::vector<std::pair<std::size_t, std::size_t>> segment(std::string_view body, Source source) const;

private:
    void add_abbreviation(std::string_view line);

    std::set<std::string, std::less<>> never_final_;
    std::set<std::string, std::less<>> ambiguous_;
};

std::vector<Sentence> split_sentences(const Article& article);

// ---------------------------------------------------------------------------
// Redaction

class Gazetteer {
public:
    /// Throws ValidationError on an empty entry.
    explicit Gazetteer(const std::vector<std::string>& names);

    /// Replaces each whole-token, case-sensitive match with one "[NAME]" token
    /// per matched token. Longer names win at the same position.
    Sentence redact(const Sentence& sentence) const;
    bool empty() const noexcept { return names_.empty(); }

private:
    std::vector<std::vector<std::string>> names_;  // tokenized, longest first
};

Sentence redact_entities(const Sentence& sentence, const std::vector<std::string>& gazetteer);

}  // namespace libra::corpus
