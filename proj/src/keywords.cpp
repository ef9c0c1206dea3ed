#include "libra/keywords.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "libra/errors.hpp"
#include "libra/fpgrowth.hpp"

namespace libra::keywords {

namespace {

constexpr std::string_view kGroupIds[] = {"age",      "gender",     "race_ethnicity", "sexual_orientation",
                                          "physical_appearance", "disability", "nationality", "religion"};
constexpr std::string_view kGroupLabels[] = {"age",      "gender",     "race/ethnicity", "sexual orientation",
                                             "physical appearance", "disability", "nationality", "religion"};

std::string squash(std::string_view text) {
    std::string out;
    for (char c : utf8::lower(trim(text)))
        if (c != ' ' && c != '_' && c != '-' && c != '/') out.push_back(c);
    return out;
}

// English function words plus common Māori particles.
constexpr std::string_view kBuiltinStopwords[] = {
    "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any", "are", "as", "at",
    "be", "because", "been", "before", "being", "below", "between", "both", "but", "by", "can", "could",
    "did", "do", "does", "doing", "down", "during", "each", "few", "for", "from", "further", "had", "has",
    "have", "having", "he", "her", "here", "hers", "herself", "him", "himself", "his", "how", "i", "if",
    "in", "into", "is", "it", "it's", "its", "itself", "just", "me", "more", "most", "my", "myself", "no",
    "nor", "not", "now", "of", "off", "on", "once", "only", "or", "other", "our", "ours", "ourselves", "out",
    "over", "own", "s", "same", "she", "should", "so", "some", "such", "t", "than", "that", "the", "their",
    "theirs", "them", "themselves", "then", "there", "these", "they", "this", "those", "through", "to", "too",
    "under", "until", "up", "very", "was", "we", "were", "what", "when", "where", "which", "while", "who",
    "whom", "why", "will", "with", "would", "you", "your", "yours", "yourself", "yourselves", "also", "said",
    "says", "one", "two", "like", "get", "got", "may", "might", "must", "shall",
    // Māori particles and determiners
    "te", "ngā", "nga", "he", "ki", "ka", "kei", "i", "o", "ā", "a", "e", "ko", "me", "mō", "mo", "nō", "no",
    "tō", "to", "tā", "ta", "ōna", "āna", "rā", "ra", "nei", "nā", "na", "hoki", "anō", "ano", "ai", "kua",
    "kia", "kāore", "kaore", "ehara", "engari", "ā", "tēnei", "tenei", "tērā", "tera",
};

}  // namespace

std::string_view group_id(SocialGroup group) { return kGroupIds[static_cast<int>(group)]; }
std::string_view group_label(SocialGroup group) { return kGroupLabels[static_cast<int>(group)]; }

std::optional<SocialGroup> parse_group(std::string_view text) {
    const auto key = squash(text);
    if (key.empty()) return std::nullopt;
    for (SocialGroup g : kAllGroups)
        if (key == squash(group_id(g)) || key == squash(group_label(g))) return g;
    return std::nullopt;
}

SocialGroup group_from_id(std::string_view id) {
    for (SocialGroup g : kAllGroups)
        if (group_id(g) == id) return g;
    throw ValidationError("unknown social group '" + std::string(id) + "'");
}

std::string_view to_string(Origin origin) {
    switch (origin) {
        case Origin::seed: return "seed";
        case Origin::embedding: return "embedding";
        case Origin::association: return "association";
    }
    return "";
}

Origin origin_from_string(std::string_view name) {
    if (name == "seed") return Origin::seed;
    if (name == "embedding") return Origin::embedding;
    if (name == "association") return Origin::association;
    throw ValidationError("unknown keyword origin '" + std::string(name) + "'");
}

std::string normalize_keyword(std::string_view keyword) { return utf8::lower(trim(keyword)); }

Json to_json(const KeywordEntry& e) {
    return Json{{"keyword", e.keyword}, {"group", group_id(e.group)}, {"origin", to_string(e.origin)}, {"score", e.score}};
}

KeywordEntry keyword_entry_from_json(const Json& j) {
    KeywordEntry e;
    e.keyword = normalize_keyword(j.at("keyword").get<std::string>());
    e.group = group_from_id(j.at("group").get<std::string>());
    e.origin = origin_from_string(j.at("origin").get<std::string>());
    e.score = j.at("score").get<double>();
    if (e.keyword.empty()) throw ValidationError("empty keyword");
    if (!(e.score >= 0.0 && e.score <= 1.0)) throw ValidationError("keyword score outside [0,1]: " + e.keyword);
    return e;
}

// ---------------------------------------------------------------------------
// Catalog

KeywordCatalog::KeywordCatalog(std::vector<KeywordEntry> entries) : entries_(std::move(entries)) {
    std::sort(entries_.begin(), entries_.end(), [](const KeywordEntry& a, const KeywordEntry& b) {
        return a.group != b.group ? a.group < b.group : a.keyword < b.keyword;
    });
    for (std::size_t i = 1; i < entries_.size(); ++i) {
        if (entries_[i].group == entries_[i - 1].group && entries_[i].keyword == entries_[i - 1].keyword)
            throw ValidationError("duplicate catalog entry (" + entries_[i].keyword + ", " +
                                  std::string(group_id(entries_[i].group)) + ")");
    }
}

std::vector<std::string> KeywordCatalog::keywords(SocialGroup group) const {
    std::vector<std::string> out;
    for (const auto& e : entries_)
        if (e.group == group) out.push_back(e.keyword);
    return out;
}

std::vector<std::string> KeywordCatalog::seeds(SocialGroup group) const {
    std::vector<std::string> out;
    for (const auto& e : entries_)
        if (e.group == group && e.origin == Origin::seed) out.push_back(e.keyword);
    return out;
}

const KeywordEntry* KeywordCatalog::find(std::string_view keyword, SocialGroup group) const {
    const auto it = std::lower_bound(entries_.begin(), entries_.end(), std::pair{group, keyword},
                                     [](const KeywordEntry& e, const auto& key) {
                                         return e.group != key.first ? e.group < key.first : e.keyword < key.second;
                                     });
    if (it != entries_.end() && it->group == group && it->keyword == keyword) return &*it;
    return nullptr;
}

std::vector<SocialGroup> KeywordCatalog::groups_of(std::string_view keyword) const {
    std::vector<SocialGroup> out;
    for (SocialGroup g : kAllGroups)
        if (contains(keyword, g)) out.push_back(g);
    return out;
}

std::map<SocialGroup, std::size_t> KeywordCatalog::counts() const {
    std::map<SocialGroup, std::size_t> out;
    for (SocialGroup g : kAllGroups) out[g] = 0;
    for (const auto& e : entries_) ++out[e.group];
    return out;
}

void KeywordCatalog::save(const std::filesystem::path& path) const {
    std::vector<Json> records;
    for (const auto& e : entries_) records.push_back(to_json(e));
    write_file_atomic(path, to_jsonl(records));
}

KeywordCatalog KeywordCatalog::load(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw UpstreamMissingError(path.string(), "keywords");
    std::vector<KeywordEntry> entries;
    const auto issues = read_jsonl(path, [&](std::size_t, const Json& j) { entries.push_back(keyword_entry_from_json(j)); });
    if (!issues.empty())
        throw ValidationError(path.string() + ":" + std::to_string(issues.front().line) + ": " + issues.front().message);
    return KeywordCatalog(std::move(entries));
}

SeedMap parse_seeds(const Json& j) {
    if (!j.is_object()) throw ValidationError("seed file must be a JSON object of group -> [keywords]");
    SeedMap seeds;
    for (const auto& [key, value] : j.items()) {
        const auto group = group_from_id(key);
        if (!value.is_array()) throw ValidationError("seed group '" + key + "' is not an array");
        auto& list = seeds[group];
        for (const auto& kw : value) {
            if (!kw.is_string()) throw ValidationError("seed group '" + key + "' has a non-string keyword");
            auto norm = normalize_keyword(kw.get<std::string>());
            if (norm.empty()) throw ValidationError("seed group '" + key + "' has an empty keyword");
            if (std::find(list.begin(), list.end(), norm) == list.end()) list.push_back(std::move(norm));
        }
    }
    return seeds;
}

SeedMap load_seed_file(const std::filesystem::path& path) { return parse_seeds(read_json_file(path)); }

KeywordCatalog catalog_from_seeds(const SeedMap& seeds) {
    std::vector<KeywordEntry> entries;
    for (const auto& [group, words] : seeds)
        for (const auto& w : words) entries.push_back({w, group, Origin::seed, 1.0});
    return KeywordCatalog(std::move(entries));
}

// ---------------------------------------------------------------------------
// Embedding expansion

std::vector<KeywordEntry> expand_by_embedding(const KeywordCatalog& catalog, const std::vector<std::string>& corpus_vocab,
                                              providers::EmbeddingProvider& embedder, const ExpansionParams& params) {
    if (params.k < 1) throw ValidationError("expansion k must be >= 1");
    if (!(params.min_sim > 0.0 && params.min_sim <= 1.0)) throw ValidationError("min_sim must be in (0, 1]");
    if (corpus_vocab.empty()) throw ValidationError("corpus vocabulary is empty");

    std::vector<std::string> vocab;
    for (const auto& w : corpus_vocab) vocab.push_back(normalize_keyword(w));
    std::sort(vocab.begin(), vocab.end());
    vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
    vocab.erase(std::remove(vocab.begin(), vocab.end(), std::string()), vocab.end());

    std::vector<std::string> seed_words;
    for (const auto& e : catalog.entries())
        if (e.origin == Origin::seed) seed_words.push_back(e.keyword);
    std::sort(seed_words.begin(), seed_words.end());
    seed_words.erase(std::unique(seed_words.begin(), seed_words.end()), seed_words.end());

    const auto vocab_vecs = providers::embed_batched(embedder, vocab, params.batch_size, params.max_in_flight);
    const auto seed_vecs = providers::embed_batched(embedder, seed_words, params.batch_size, params.max_in_flight);
    std::unordered_map<std::string, const providers::Vector*> seed_lookup;
    for (std::size_t i = 0; i < seed_words.size(); ++i) seed_lookup[seed_words[i]] = &seed_vecs[i];

    std::map<std::pair<SocialGroup, std::string>, double> best;
    for (SocialGroup group : kAllGroups) {
        const auto group_seeds = catalog.seeds(group);
        const std::set<std::string> excluded(group_seeds.begin(), group_seeds.end());
        for (const auto& seed : group_seeds) {
            const auto& sv = *seed_lookup.at(seed);
            std::vector<std::pair<double, const std::string*>> scored;
            for (std::size_t i = 0; i < vocab.size(); ++i) {
                if (excluded.contains(vocab[i])) continue;
                const double sim = providers::cosine(sv, vocab_vecs[i]);
                if (sim >= params.min_sim) scored.emplace_back(sim, &vocab[i]);
            }
            std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
                return a.first != b.first ? a.first > b.first : *a.second < *b.second;
            });
            if (scored.size() > params.k) scored.resize(params.k);
            for (const auto& [sim, word] : scored) {
                auto& slot = best[{group, *word}];
                slot = std::max(slot, std::min(sim, 1.0));
            }
        }
    }
    std::vector<KeywordEntry> out;
    for (const auto& [key, score] : best) out.push_back({key.second, key.first, Origin::embedding, score});
    return out;
}

// ---------------------------------------------------------------------------
// Association mining

Stopwords::Stopwords() {
    for (auto w : kBuiltinStopwords) words_.insert(std::string(w));
}

Stopwords::Stopwords(const std::filesystem::path& file) {
    for (const auto& w : read_word_list(file)) words_.insert(utf8::lower(w));
}

Stopwords::Stopwords(std::vector<std::string> words) {
    for (auto& w : words) words_.insert(utf8::lower(w));
}

std::set<std::string> transaction_items(const corpus::Sentence& sentence, const Stopwords& stopwords) {
    std::set<std::string> items;
    for (const auto& t : sentence.tokens) {
        if (t == corpus::kNamePlaceholder || !corpus::is_word_token(t)) continue;
        auto w = utf8::lower(t);
        if (!stopwords.contains(w)) items.insert(std::move(w));
    }
    return items;
}

std::vector<KeywordEntry> mine_associations(const std::vector<corpus::Sentence>& sentences,
                                            const KeywordCatalog& catalog, const AssociationParams& params,
                                            const Stopwords& stopwords) {
    if (params.min_support < 1) throw ValidationError("min_support must be >= 1");
    if (!(params.min_conf > 0.0 && params.min_conf <= 1.0)) throw ValidationError("min_conf must be in (0, 1]");

    // Item ids follow lexicographic order of the words, independent of sentence order.
    std::vector<std::set<std::string>> raw;
    raw.reserve(sentences.size());
    std::set<std::string> vocab;
    for (const auto& s : sentences) {
        raw.push_back(transaction_items(s, stopwords));
        vocab.insert(raw.back().begin(), raw.back().end());
    }
    std::vector<std::string> words(vocab.begin(), vocab.end());
    std::unordered_map<std::string, fpgrowth::Item> ids;
    for (std::size_t i = 0; i < words.size(); ++i) ids[words[i]] = static_cast<fpgrowth::Item>(i);

    std::vector<std::vector<fpgrowth::Item>> transactions;
    transactions.reserve(raw.size());
    for (const auto& r : raw) {
        std::vector<fpgrowth::Item> t;
        for (const auto& w : r) t.push_back(ids.at(w));
        transactions.push_back(std::move(t));
    }

    const auto itemsets = fpgrowth::mine(transactions, params.min_support, 2);
    std::unordered_map<fpgrowth::Item, std::size_t> single;
    for (const auto& s : itemsets)
        if (s.items.size() == 1) single[s.items[0]] = s.support;

    std::map<std::pair<SocialGroup, std::string>, double> best;
    for (const auto& s : itemsets) {
        if (s.items.size() != 2) continue;
        for (int side = 0; side < 2; ++side) {
            const auto& antecedent = words[s.items[side]];
            const auto& consequent = words[s.items[1 - side]];
            const auto groups = catalog.groups_of(antecedent);
            if (groups.empty()) continue;
            const double conf = static_cast<double>(s.support) / static_cast<double>(single.at(s.items[side]));
            if (conf < params.min_conf) continue;
            for (SocialGroup g : groups) {
                auto& slot = best[{g, consequent}];
                slot = std::max(slot, conf);
            }
        }
    }
    std::vector<KeywordEntry> out;
    for (const auto& [key, conf] : best) out.push_back({key.second, key.first, Origin::association, conf});
    return out;
}

// ---------------------------------------------------------------------------
// Catalog assembly

CatalogBuild build_catalog(const SeedMap& seeds, const std::vector<std::vector<KeywordEntry>>& expansions,
                           const std::vector<std::string>& blocklist) {
    for (SocialGroup g : kAllGroups) {
        const auto it = seeds.find(g);
        if (it == seeds.end() || it->second.empty())
            throw ValidationError("social group '" + std::string(group_id(g)) + "' has no seed keywords");
    }
    std::set<std::string> blocked;
    for (const auto& b : blocklist) blocked.insert(normalize_keyword(b));

    CatalogBuild build;
    std::map<std::pair<SocialGroup, std::string>, KeywordEntry> merged;
    auto merge = [&](KeywordEntry e) {
        const auto key = std::pair{e.group, e.keyword};
        auto [it, inserted] = merged.emplace(key, e);
        if (inserted) return;
        auto& cur = it->second;
        // Seeds keep their origin; otherwise the higher score wins.
        if (cur.origin == Origin::seed) return;
        if (e.origin == Origin::seed || e.score > cur.score) cur = e;
    };
    for (const auto& [group, words] : seeds)
        for (const auto& w : words) merge({normalize_keyword(w), group, Origin::seed, 1.0});
    for (const auto& list : expansions) {
        for (auto e : list) {
            e.keyword = normalize_keyword(e.keyword);
            if (e.keyword.empty()) continue;
            if (!(e.score >= 0.0 && e.score <= 1.0))
                throw ValidationError("expansion score outside [0,1] for '" + e.keyword + "'");
            merge(std::move(e));
        }
    }

    std::vector<KeywordEntry> entries;
    for (auto& [key, e] : merged) {
        if (blocked.contains(e.keyword)) {
            if (e.origin == Origin::seed)
                build.warnings.push_back("blocklist removed seed keyword '" + e.keyword + "' from group '" +
                                         std::string(group_id(e.group)) + "'");
            continue;
        }
        entries.push_back(std::move(e));
    }
    build.catalog = KeywordCatalog(std::move(entries));
    for (SocialGroup g : kAllGroups)
        if (build.catalog.seeds(g).empty())
            build.warnings.push_back("group '" + std::string(group_id(g)) + "' lost all seeds to the blocklist");
    return build;
}

}  // namespace libra::keywords
