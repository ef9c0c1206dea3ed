#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "libra/corpus.hpp"
#include "libra/providers.hpp"
#include "libra/util.hpp"

namespace libra::keywords {

enum class SocialGroup {
    age,
    gender,
    race_ethnicity,
    sexual_orientation,
    physical_appearance,
    disability,
    nationality,
    religion,
};

inline constexpr std::array<SocialGroup, 8> kAllGroups = {
    SocialGroup::age,        SocialGroup::gender,      SocialGroup::race_ethnicity, SocialGroup::sexual_orientation,
    SocialGroup::physical_appearance, SocialGroup::disability, SocialGroup::nationality, SocialGroup::religion,
};

std::string_view group_id(SocialGroup group);
std::string_view group_label(SocialGroup group);
/// Accepts ids ("race_ethnicity") and labels ("race/ethnicity", "Race ethnicity"),
/// ignoring case, spaces, underscores, hyphens and slashes.
std::optional<SocialGroup> parse_group(std::string_view text);
SocialGroup group_from_id(std::string_view id);

enum class Origin { seed, embedding, association };

std::string_view to_string(Origin origin);
Origin origin_from_string(std::string_view name);

std::string normalize_keyword(std::string_view keyword);

struct KeywordEntry {
    std::string keyword;
    SocialGroup group = SocialGroup::age;
    Origin origin = Origin::seed;
    double score = 1.0;

    bool operator==(const KeywordEntry&) const = default;
};

Json to_json(const KeywordEntry& entry);
KeywordEntry keyword_entry_from_json(const Json& j);

/// Immutable set of (keyword, group) entries ordered by group, then keyword.
class KeywordCatalog {
public:
    KeywordCatalog() = default;
    explicit KeywordCatalog(std::vector<KeywordEntry> entries);

    const std::vector<KeywordEntry>& entries() const noexcept { return entries_; }
    std::vector<std::string> keywords(SocialGroup group) const;
    std::vector<std::string> seeds(SocialGroup group) const;
    const KeywordEntry* find(std::string_view keyword, SocialGroup group) const;
    bool contains(std::string_view keyword, SocialGroup group) const { return find(keyword, group) != nullptr; }
    /// Groups that list `keyword`, in taxonomy order.
    std::vector<SocialGroup> groups_of(std::string_view keyword) const;
    std::map<SocialGroup, std::size_t> counts() const;
    std::size_t size() const noexcept { return entries_.size(); }

    void save(const std::filesystem::path& path) const;
    static KeywordCatalog load(const std::filesystem::path& path);

private:
    std::vector<KeywordEntry> entries_;
};

using SeedMap = std::map<SocialGroup, std::vector<std::string>>;

/// Parses {"group_id": ["keyword", ...], ...}.
SeedMap parse_seeds(const Json& j);
SeedMap load_seed_file(const std::filesystem::path& path);
KeywordCatalog catalog_from_seeds(const SeedMap& seeds);

struct ExpansionParams {
    std::size_t k = 10;
    double min_sim = 0.6;
    std::size_t batch_size = 64;
    std::size_t max_in_flight = 4;
};

/// Nearest corpus-vocabulary neighbours of every seed by cosine similarity.
std::vector<KeywordEntry> expand_by_embedding(const KeywordCatalog& catalog, const std::vector<std::string>& corpus_vocab,
                                              providers::EmbeddingProvider& embedder, const ExpansionParams& params);

class Stopwords {
public:
    Stopwords();  // built-in English function words and Māori particles
    explicit Stopwords(const std::filesystem::path& file);
    explicit Stopwords(std::vector<std::string> words);

    bool contains(std::string_view word) const { return words_.contains(std::string(word)); }

private:
    std::set<std::string> words_;
};

/// Lowercased word tokens of a sentence with stopwords and non-word tokens removed.
std::set<std::string> transaction_items(const corpus::Sentence& sentence, const Stopwords& stopwords);

struct AssociationParams {
    std::size_t min_support = 5;
    double min_conf = 0.3;
};

/// Rules {K} -> {W} over sentence transactions, for catalog keywords K.
std::vector<KeywordEntry> mine_associations(const std::vector<corpus::Sentence>& sentences,
                                            const KeywordCatalog& catalog, const AssociationParams& params,
                                            const Stopwords& stopwords = Stopwords());

struct CatalogBuild {
    KeywordCatalog catalog;
    std::vector<std::string> warnings;
};

/// Union of seeds and expansions minus the blocklist; duplicates keep the
/// highest score. Throws ValidationError if any taxonomy group has no seeds.
CatalogBuild build_catalog(const SeedMap& seeds, const std::vector<std::vector<KeywordEntry>>& expansions,
                           const std::vector<std::string>& blocklist);

}  // namespace libra::keywords
