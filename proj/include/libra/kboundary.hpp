#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "libra/prompts.hpp"
#include "libra/providers.hpp"
#include "libra/triplets.hpp"

namespace libra::kboundary {

/// English word list; a word counts as English if it, or one of its
/// suffix-stripped stems, is listed.
class Dictionary {
public:
    Dictionary() = default;
    explicit Dictionary(std::vector<std::string> words);
    static Dictionary load(const std::filesystem::path& path);

    bool contains(std::string_view word) const { return words_.contains(std::string(word)); }
    bool covers(std::string_view word) const;
    std::size_t size() const noexcept { return words_.size(); }

private:
    std::set<std::string> words_;
};

/// Candidate stems: the word itself, then the word without 's, s, es, ed or
/// ing, plus the undoubled form when a stripped ed/ing stem ends in a doubled
/// consonant ("running" -> "runn" -> "run").
std::vector<std::string> variant_stems(std::string_view word);

/// {"word": "definition"}; keys are lowercased.
using Glossary = std::map<std::string, std::string>;
Glossary load_glossary(const std::filesystem::path& path);

struct LocalWord {
    std::string word;
    std::vector<std::string> samples;
    std::optional<std::string> official_definition;
};

inline constexpr std::size_t kMaxSamples = 5;

/// Lowercased alphabetic tokens of the rendered sentences of every
/// non-rejected triplet, minus dictionary-covered words. Sorted by word;
/// samples are the first distinct rendered sentences in dataset order.
std::vector<LocalWord> extract_local_vocab(const triplets::Dataset& dataset, const Dictionary& dictionary,
                                           const Glossary& glossary = {});

bool is_alphabetic(std::string_view token);

std::string probe_definition(const LocalWord& word, providers::GenerationProvider& generator,
                             const prompts::PromptTemplate& tmpl = prompts::builtin(prompts::Task::define));

/// YES/NO from the leading word of the reply, case-insensitive; nullopt otherwise.
std::optional<bool> parse_judgement(std::string_view reply);

struct Judgement {
    bool matched = false;
    std::string transcript;
    bool judge_called = false;
};

/// Empty D1 is a non-match without calling the judge. One retry on an
/// unparseable reply, then ProviderError carrying the transcript.
Judgement judge_match(std::string_view d1, std::string_view d2, providers::GenerationProvider& judge,
                      const prompts::PromptTemplate& tmpl = prompts::builtin(prompts::Task::judge));

enum class ProbeStatus { probed, unprobed, unglossed };
std::string_view to_string(ProbeStatus status);

struct ProbeResult {
    std::string word;
    ProbeStatus status = ProbeStatus::unglossed;
    std::string model_definition;
    std::optional<std::string> official_definition;
    bool matched = false;
    std::string transcript;
    std::vector<std::string> samples;
};

Json to_json(const ProbeResult& r);

struct ProbeParams {
    std::size_t max_in_flight = 4;
};

/// Probes every glossed word (unglossed words are reported, not probed).
/// Provider failures mark a word unprobed. Results follow the input order.
std::vector<ProbeResult> probe_words(const std::vector<LocalWord>& words, providers::GenerationProvider& prober,
                                     providers::GenerationProvider& judge, const ProbeParams& params = {},
                                     const prompts::PromptTemplate& p1 = prompts::builtin(prompts::Task::define),
                                     const prompts::PromptTemplate& p2 = prompts::builtin(prompts::Task::judge));

/// Matched / probed over glossed words. No glossed words gives 1. Glossed
/// words with none probed is an error.
double compute_bbs(const std::vector<ProbeResult>& results);

std::vector<std::string> failed_words(const std::vector<ProbeResult>& results);

/// Clears kb_valid on every triplet whose three rendered sentences contain a
/// failed word. Returns the number of triplets containing each word.
std::map<std::string, std::size_t> mark_invalid(triplets::Dataset& dataset, const std::vector<std::string>& failed);

/// Sets kb_valid back to true everywhere, before a fresh probe run.
void reset_validity(triplets::Dataset& dataset);

Json kb_report(const std::vector<ProbeResult>& results, double bbs, const std::map<std::string, std::size_t>& invalidated);

}  // namespace libra::kboundary
