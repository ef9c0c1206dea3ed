#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "libra/clustering.hpp"
#include "libra/corpus.hpp"
#include "libra/errors.hpp"
#include "libra/keywords.hpp"
#include "libra/providers.hpp"

namespace libra::triplets {

using Tokens = std::vector<std::string>;
using keywords::SocialGroup;

enum class Status { pending, accepted, rejected, edited };
std::string_view to_string(Status status);
Status status_from_string(std::string_view name);

struct CandidateSentence {
    corpus::Sentence sentence;
    std::string keyword;
    SocialGroup group = SocialGroup::age;
    int cluster_id = 0;
};

/// Sentences of every article in the store, keyed by article id.
using SentenceIndex = std::map<std::string, std::vector<corpus::Sentence>, std::less<>>;

SentenceIndex index_sentences(const corpus::ArticleStore& store, const corpus::SentenceSplitter& splitter,
                              const corpus::Gazetteer* gazetteer = nullptr);

/// Scans each cluster's articles with the keywords of the cluster's groups
/// only. Whole-token, case-insensitive matching; multi-word keywords match as
/// token runs. One candidate per (sentence, keyword); if a keyword belongs to
/// several allocated groups the first in taxonomy order is used. Output is
/// ordered by article id, sentence index, keyword.
std::vector<CandidateSentence> search_sentences(const std::vector<clustering::ClusterProfile>& clusters,
                                                const keywords::KeywordCatalog& catalog, const SentenceIndex& sentences);

struct SpanSplit {
    Tokens u_left;
    Tokens omega;
    Tokens u_right;

    Tokens with(const Tokens& middle) const;
    bool operator==(const SpanSplit&) const = default;
};

/// First case-insensitive occurrence of the keyword's token run.
SpanSplit locate_target_span(const Tokens& tokens, std::string_view keyword);

// ---------------------------------------------------------------------------
// Perturbation

/// {"group_id": {"term": "opposite", ...}, ...}. Lookups are case-insensitive.
class AntonymMap {
public:
    AntonymMap() = default;
    explicit AntonymMap(const Json& j);
    static AntonymMap load(const std::filesystem::path& path);
    std::optional<std::string> find(SocialGroup group, std::string_view keyword) const;
    void add(SocialGroup group, std::string keyword, std::string antonym);

private:
    std::map<SocialGroup, std::map<std::string, std::string>> map_;
};

struct Perturbation {
    std::string anti;
    std::string unrelated;
};

/// Chooses anti-stereotype and unrelated terms. Keyword embeddings are
/// fetched once per group and cached.
class Perturber {
public:
    Perturber(const keywords::KeywordCatalog& catalog, AntonymMap antonyms, providers::EmbeddingProvider& embedder,
              std::vector<std::string> unrelated_pool, std::uint64_t seed);

    /// Antonym entry if present, else the same-group keyword least similar to
    /// `keyword` by cosine (ties: lexicographically smallest).
    std::string anti_term(std::string_view keyword, SocialGroup group);
    /// Pool entry not in the group's keywords, chosen by hashing the seed and triplet id.
    std::string unrelated_term(std::string_view triplet_id, SocialGroup group) const;
    Perturbation perturb(std::string_view keyword, SocialGroup group, std::string_view triplet_id);

private:
    const keywords::KeywordCatalog& catalog_;
    AntonymMap antonyms_;
    providers::EmbeddingProvider& embedder_;
    std::vector<std::string> pool_;
    std::uint64_t seed_;
    std::mutex mutex_;
    std::map<SocialGroup, std::map<std::string, providers::Vector>> vectors_;
    std::map<std::pair<SocialGroup, std::string>, std::string> anti_cache_;
};

// ---------------------------------------------------------------------------
// Triplets

struct Triplet {
    std::string id;
    SocialGroup group = SocialGroup::age;
    std::string keyword;
    SpanSplit split;
    Tokens anti_term;
    Tokens unrelated_term;
    Status status = Status::pending;
    bool kb_valid = true;
    std::string source_article_id;

    Tokens stereo_tokens() const { return split.with(split.omega); }
    Tokens anti_tokens() const { return split.with(anti_term); }
    Tokens unrelated_tokens() const { return split.with(unrelated_term); }
    bool operator==(const Triplet&) const = default;
};

std::string triplet_id(std::string_view article_id, std::size_t sentence_index, std::string_view keyword);

/// Terms take the capitalization of ω's first token.
Triplet assemble_triplet(const CandidateSentence& candidate, const SpanSplit& split, std::string_view anti,
                         std::string_view unrelated);

Json to_json(const Triplet& t);
Triplet triplet_from_json(const Json& j);

struct RenderedSentence {
    std::string text;
    std::size_t span_begin = 0;  // byte offsets of the target span in `text`
    std::size_t span_end = 0;
};
RenderedSentence render(const SpanSplit& split, const Tokens& middle);

/// Review payload: the record plus rendered sentences with span offsets.
Json review_json(const Triplet& t);

// ---------------------------------------------------------------------------
// Review

enum class Action { accept, reject, edit };

struct Verdict {
    Action action = Action::accept;
    std::optional<Tokens> edited_anti;
    std::string reviewer;
    std::string note;
};

struct FieldError {
    std::string field;
    std::string message;
};

class VerdictValidationError : public ValidationError {
public:
    explicit VerdictValidationError(std::vector<FieldError> fields);
    const std::vector<FieldError>& fields() const noexcept { return fields_; }

private:
    std::vector<FieldError> fields_;
};

class NotFoundError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class StatusConflictError : public ValidationError {
public:
    StatusConflictError(const std::string& id, Status current);
    Status current() const noexcept { return current_; }

private:
    Status current_;
};

/// Collects every problem in the body. `edited_anti` may be a token array or a string.
Verdict parse_verdict(const Json& body);

/// Pure transition; throws StatusConflictError unless the triplet is pending.
Triplet apply_verdict(const Triplet& triplet, const Verdict& verdict);

Json audit_record(const Triplet& before, const Triplet& after, const Verdict& verdict, std::string_view timestamp);

// ---------------------------------------------------------------------------
// Dataset

struct GroupCounts {
    std::size_t pending = 0;
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t edited = 0;
};

/// Ordered triplet collection with id lookup.
class Dataset {
public:
    Dataset() = default;
    explicit Dataset(std::vector<Triplet> triplets);

    const std::vector<Triplet>& triplets() const noexcept { return triplets_; }
    std::vector<Triplet>& mutable_triplets() noexcept { return triplets_; }
    const Triplet* find(std::string_view id) const;
    std::size_t size() const noexcept { return triplets_.size(); }
    std::map<SocialGroup, GroupCounts> stats() const;

    std::string serialize() const;
    void save(const std::filesystem::path& path) const;
    static Dataset parse(std::string_view text);
    static Dataset load(const std::filesystem::path& path);

    /// Carries status, edited anti terms and kb flags over from `previous`
    /// for ids present in both.
    void merge_review_state(const Dataset& previous);

private:
    void reindex();
    std::vector<Triplet> triplets_;
    std::map<std::string, std::size_t, std::less<>> index_;
};

bool eligible(const Triplet& t, bool include_pending);

/// Concurrent readers over immutable snapshots, one writer. Every verdict is
/// persisted (dataset rewrite plus audit append) before it becomes visible.
class TripletStore {
public:
    TripletStore(std::filesystem::path dataset_path, std::filesystem::path audit_path);

    std::shared_ptr<const Dataset> snapshot() const;
    Triplet submit(std::string_view id, const Verdict& verdict);

private:
    std::filesystem::path dataset_path_;
    std::filesystem::path audit_path_;
    mutable std::mutex snapshot_mutex_;
    std::mutex writer_mutex_;
    std::shared_ptr<const Dataset> current_;
};

struct BuildResult {
    Dataset dataset;
    std::vector<std::string> warnings;
};

/// Candidates to pending triplets, in candidate order. Candidates whose
/// perturbation fails are skipped with a warning.
BuildResult build_triplets(const std::vector<CandidateSentence>& candidates, Perturber& perturber);

}  // namespace libra::triplets
