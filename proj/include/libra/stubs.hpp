#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "libra/providers.hpp"

namespace libra::stubs {

// Deterministic in-process backends. Every stub is a pure function of its
// constructor arguments and the request, so repeated runs produce
// bit-identical results regardless of request order or concurrency.

/// log P(token) = ln(0.01 + 0.98 * u(token)), u = splitmix64(seed ^ fnv1a64(token)) mapped to [0,1).
/// Context is ignored, so MLM and CLM requests see the same per-token values.
class UnigramScorer final : public providers::LogprobProvider {
public:
    explicit UnigramScorer(std::uint64_t seed) : seed_(seed) {}
    double token_logprob(std::string_view token) const;
    providers::LogprobResponse logprobs(const providers::LogprobRequest& request) override;

private:
    std::uint64_t seed_;
};

/// Same unit-interval map as UnigramScorer, but hashed over the whole token
/// sequence, mode and position, so every (sentence, position) draws an
/// independent value. Definition probes get a non-answer.
class RandomLM final : public providers::LogprobProvider, public providers::GenerationProvider {
public:
    explicit RandomLM(std::uint64_t seed) : seed_(seed) {}
    providers::LogprobResponse logprobs(const providers::LogprobRequest& request) override;
    std::string generate(const providers::GenerationRequest& request) override;

private:
    std::uint64_t seed_;
};

enum class Role { stereo, anti, unrelated };

struct SentenceTriple {
    std::vector<std::string> stereo;
    std::vector<std::string> anti;
    std::vector<std::string> unrelated;
};

/// Looks up which rendering of which triplet a token sequence is. When two
/// triplets render the same sentence, the first registration wins.
class RoleIndex {
public:
    explicit RoleIndex(const std::vector<SentenceTriple>& triples);
    struct Hit {
        Role role;
        std::size_t ordinal;
    };
    std::optional<Hit> find(const std::vector<std::string>& tokens) const;

private:
    std::unordered_map<std::string, Hit> index_;
};

enum class TheoreticalKind { ideal, local_ideal, stereotyped };

/// Reference models that fix the metric extremes.
///  ideal:       per-token log 0.5 +/- 1e-6 for stereo/anti, the sign alternating
///               with triplet parity; unrelated log 0.5 - 1. Misses every definition.
///  local_ideal: ideal's scores; answers definition probes with the glossary entry.
///  stereotyped: stereo log 0.9, anti log 0.1, unrelated log 0.01; answers
///               definition probes with the glossary entry.
/// Sentences outside the dataset score log 0.5 - 2 per token.
class TheoreticalLM final : public providers::LogprobProvider, public providers::GenerationProvider {
public:
    static constexpr double kDelta = 1e-6;

    TheoreticalLM(TheoreticalKind kind, const std::vector<SentenceTriple>& dataset,
                  std::map<std::string, std::string> glossary = {});
    providers::LogprobResponse logprobs(const providers::LogprobRequest& request) override;
    std::string generate(const providers::GenerationRequest& request) override;

    double sentence_logprob(const std::vector<std::string>& tokens) const;

private:
    TheoreticalKind kind_;
    RoleIndex roles_;
    std::map<std::string, std::string> glossary_;
};

/// Deterministic vector per text: the normalized sum of per-token pseudo-random
/// vectors over lowercased word tokens.
class HashEmbedder final : public providers::EmbeddingProvider {
public:
    explicit HashEmbedder(std::size_t dim = 64, std::uint64_t seed = 0) : dim_(dim), seed_(seed) {}
    std::vector<providers::Vector> embed(std::span<const std::string> texts) override;
    providers::Vector embed_one(std::string_view text) const;

private:
    std::size_t dim_;
    std::uint64_t seed_;
};

/// Replies with the last non-empty line of the prompt, cut to max_tokens tokens.
class EchoGenerator final : public providers::GenerationProvider {
public:
    std::string generate(const providers::GenerationRequest& request) override;
};

/// Keyword-spotting backend for offline pipeline runs.
///  summarize: "Topics: w1, w2, ..." for lexicon words in summary + passage.
///  allocate:  comma-separated group ids whose lexicon words occur in the summary.
///  define:    the glossary entry for the word, else "unknown".
///  judge:     YES iff the two definitions are equal ignoring case and spacing.
class LexiconGenerator final : public providers::GenerationProvider {
public:
    LexiconGenerator(std::map<std::string, std::vector<std::string>> word_groups,
                     std::map<std::string, std::string> glossary = {});
    std::string generate(const providers::GenerationRequest& request) override;

private:
    std::map<std::string, std::vector<std::string>> word_groups_;  // word -> group ids
    std::map<std::string, std::string> glossary_;
};

/// Judge that answers YES iff the two definitions match ignoring case and spacing.
class EqualityJudge final : public providers::GenerationProvider {
public:
    std::string generate(const providers::GenerationRequest& request) override;
};

/// Definition prober that always answers with a fixed string (for misdefinition tests).
class FixedGenerator final : public providers::GenerationProvider {
public:
    explicit FixedGenerator(std::string reply) : reply_(std::move(reply)) {}
    std::string generate(const providers::GenerationRequest&) override { return reply_; }

private:
    std::string reply_;
};

/// Definitions compare equal when they match after lowercasing and collapsing whitespace.
bool same_definition(std::string_view a, std::string_view b);

}  // namespace libra::stubs
