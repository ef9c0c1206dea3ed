#include "support.hpp"

#include <algorithm>
#include <random>
#include <tuple>

#include "libra/errors.hpp"
#include "libra/fpgrowth.hpp"
#include "libra/keywords.hpp"
#include "libra/stubs.hpp"

using namespace libra;
using namespace libra::keywords;

namespace {

SeedMap full_seeds() {
    SeedMap s;
    for (auto g : kAllGroups) s[g] = {std::string(group_id(g)) + "_seed"};
    return s;
}

corpus::Sentence sentence_of(const std::vector<std::string>& tokens) {
    corpus::Sentence s;
    s.tokens = tokens;
    s.text = join(tokens, " ");
    return s;
}

using Row = std::tuple<std::string, SocialGroup, double>;

std::vector<Row> rows(const std::vector<KeywordEntry>& entries) {
    std::vector<Row> out;
    for (const auto& e : entries) out.emplace_back(e.keyword, e.group, e.score);
    std::sort(out.begin(), out.end());
    return out;
}

/// Embeds every text to the same vector except those listed in `special`.
class TableEmbedder final : public providers::EmbeddingProvider {
public:
    std::map<std::string, providers::Vector> table;
    std::vector<providers::Vector> embed(std::span<const std::string> texts) override {
        std::vector<providers::Vector> out;
        for (const auto& t : texts) {
            const auto it = table.find(t);
            out.push_back(it == table.end() ? providers::Vector{0.0, 0.0, 1.0} : it->second);
        }
        return out;
    }
};

}  // namespace

TEST_CASE("group ids and labels") {
    CHECK(kAllGroups.size() == 8);
    CHECK(parse_group("race/ethnicity") == SocialGroup::race_ethnicity);
    CHECK(parse_group("Sexual orientation") == SocialGroup::sexual_orientation);
    CHECK(parse_group("physical-appearance") == SocialGroup::physical_appearance);
    CHECK_FALSE(parse_group("astrology").has_value());
    for (auto g : kAllGroups) CHECK(group_from_id(group_id(g)) == g);
    CHECK_THROWS_AS(group_from_id("astrology"), ValidationError);
}

TEST_CASE("embedding expansion matches the brute-force cosine scan") {
    const auto fx = test::fixture_json("expansion_nurse.json");
    SeedMap seeds;
    seeds[group_from_id(fx.at("group").get<std::string>())] = {fx.at("seed").get<std::string>()};
    const auto catalog = catalog_from_seeds(seeds);
    stubs::HashEmbedder embedder(64, 0);
    ExpansionParams p;
    p.k = fx.at("k").get<std::size_t>();
    p.min_sim = fx.at("min_sim").get<double>();
    const auto out = expand_by_embedding(catalog, fx.at("vocab").get<std::vector<std::string>>(), embedder, p);

    std::vector<Row> want;
    for (const auto& e : fx.at("expected"))
        want.emplace_back(e.at("keyword").get<std::string>(), SocialGroup::gender, e.at("score").get<double>());
    std::sort(want.begin(), want.end());
    const auto got = rows(out);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(std::get<0>(got[i]) == std::get<0>(want[i]));
        CHECK(std::get<1>(got[i]) == std::get<1>(want[i]));
        CHECK(std::get<2>(got[i]) == doctest::Approx(std::get<2>(want[i])).epsilon(1e-12));
    }
    for (const auto& e : out) CHECK(e.origin == Origin::embedding);
}

TEST_CASE("embedding expansion edge cases") {
    SeedMap seeds;
    seeds[SocialGroup::gender] = {"nurse"};
    const auto catalog = catalog_from_seeds(seeds);
    TableEmbedder emb;
    emb.table["nurse"] = {1.0, 0.0, 0.0};
    emb.table["twin"] = {1.0, 0.0, 0.0};
    emb.table["other"] = {0.6, 0.8, 0.0};

    ExpansionParams p;
    p.k = 5;
    p.min_sim = 0.5;
    const auto out = expand_by_embedding(catalog, {"twin", "other", "nurse", "tree"}, emb, p);
    REQUIRE(out.size() == 2);
    const auto got = rows(out);
    CHECK(std::get<0>(got[0]) == "other");
    CHECK(std::get<2>(got[0]) == doctest::Approx(0.6));
    CHECK(std::get<0>(got[1]) == "twin");
    CHECK(std::get<2>(got[1]) == doctest::Approx(1.0));

    SUBCASE("min_sim 1.0 without identical vectors gives nothing") {
        emb.table.erase("twin");
        p.min_sim = 1.0;
        CHECK(expand_by_embedding(catalog, {"other", "tree"}, emb, p).empty());
    }
    SUBCASE("preconditions") {
        p.k = 0;
        CHECK_THROWS_AS(expand_by_embedding(catalog, {"x"}, emb, p), ValidationError);
        p.k = 1;
        p.min_sim = 0.0;
        CHECK_THROWS_AS(expand_by_embedding(catalog, {"x"}, emb, p), ValidationError);
        p.min_sim = 0.5;
        CHECK_THROWS_AS(expand_by_embedding(catalog, {}, emb, p), ValidationError);
    }
}

TEST_CASE("association rules match exhaustive enumeration") {
    const auto fx = test::fixture_json("associations.json");
    std::vector<KeywordEntry> entries;
    for (const auto& [kw, g] : fx.at("keywords").items())
        entries.push_back({kw, group_from_id(g.get<std::string>()), Origin::seed, 1.0});
    const KeywordCatalog catalog(entries);
    std::vector<corpus::Sentence> sentences;
    for (const auto& t : fx.at("transactions")) sentences.push_back(sentence_of(t.get<std::vector<std::string>>()));
    AssociationParams p{fx.at("min_support").get<std::size_t>(), fx.at("min_conf").get<double>()};
    const Stopwords none(std::vector<std::string>{});

    std::vector<Row> want;
    for (const auto& e : fx.at("expected"))
        want.emplace_back(e.at("keyword").get<std::string>(), group_from_id(e.at("group").get<std::string>()),
                          e.at("score").get<double>());
    std::sort(want.begin(), want.end());

    const auto got = rows(mine_associations(sentences, catalog, p, none));
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(std::get<0>(got[i]) == std::get<0>(want[i]));
        CHECK(std::get<1>(got[i]) == std::get<1>(want[i]));
        CHECK(std::get<2>(got[i]) == doctest::Approx(std::get<2>(want[i])).epsilon(1e-12));
    }

    SUBCASE("sentence order does not matter") {
        auto shuffled = sentences;
        std::mt19937 rng(11);
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        CHECK(rows(mine_associations(shuffled, catalog, p, none)) == got);
    }
    SUBCASE("unreachable support") {
        p.min_support = sentences.size() + 1;
        CHECK(mine_associations(sentences, catalog, p, none).empty());
    }
}

TEST_CASE("association small case") {
    const auto fx = test::fixture_json("associations.json").at("small");
    const KeywordCatalog catalog({{fx.at("keyword").get<std::string>(), SocialGroup::age, Origin::seed, 1.0}});
    std::vector<corpus::Sentence> sentences;
    for (const auto& t : fx.at("transactions")) sentences.push_back(sentence_of(t.get<std::vector<std::string>>()));
    const AssociationParams p{fx.at("min_support").get<std::size_t>(), fx.at("min_conf").get<double>()};
    const auto out = mine_associations(sentences, catalog, p, Stopwords(std::vector<std::string>{}));
    REQUIRE(out.size() == 1);
    CHECK(out[0].keyword == "b");
    CHECK(out[0].origin == Origin::association);
    CHECK(out[0].score == doctest::Approx(2.0 / 3.0));

    SUBCASE("absent keyword") {
        const KeywordCatalog other({{"zzz", SocialGroup::age, Origin::seed, 1.0}});
        CHECK(mine_associations(sentences, other, p, Stopwords(std::vector<std::string>{})).empty());
    }
}

TEST_CASE("stopwords drop out of transactions") {
    const auto items = transaction_items(sentence_of({"The", "kuia", "and", "the", "moko", "."}), Stopwords());
    CHECK(items == std::set<std::string>{"kuia", "moko"});
}

TEST_CASE("fp-growth agrees with brute force on random transactions") {
    std::mt19937 rng(3);
    std::vector<std::vector<fpgrowth::Item>> tx(60);
    for (auto& t : tx)
        for (fpgrowth::Item i = 0; i < 8; ++i)
            if (rng() % 3 == 0) t.push_back(i);
    const auto mined = fpgrowth::mine(tx, 5, 3);
    std::vector<fpgrowth::Itemset> brute;
    for (unsigned mask = 1; mask < 256; ++mask) {
        std::vector<fpgrowth::Item> items;
        for (fpgrowth::Item i = 0; i < 8; ++i)
            if (mask & (1u << i)) items.push_back(i);
        if (items.size() > 3) continue;
        std::size_t support = 0;
        for (const auto& t : tx)
            if (std::includes(t.begin(), t.end(), items.begin(), items.end())) ++support;
        if (support >= 5) brute.push_back({items, support});
    }
    std::sort(brute.begin(), brute.end());
    CHECK(mined == brute);
}

TEST_CASE("catalog assembly") {
    SUBCASE("seeds only") {
        const auto b = build_catalog(full_seeds(), {}, {});
        CHECK(b.catalog.size() == 8);
        for (const auto& e : b.catalog.entries()) {
            CHECK(e.origin == Origin::seed);
            CHECK(e.score == 1.0);
        }
        CHECK(b.warnings.empty());
    }
    SUBCASE("duplicates keep the higher score") {
        const auto b = build_catalog(full_seeds(),
                                     {{{"kuia", SocialGroup::age, Origin::embedding, 0.7}},
                                      {{"Kuia", SocialGroup::age, Origin::association, 0.9}}},
                                     {});
        const auto* e = b.catalog.find("kuia", SocialGroup::age);
        REQUIRE(e);
        CHECK(e->score == doctest::Approx(0.9));
        CHECK(b.catalog.size() == 9);
    }
    SUBCASE("blocklisted seed is removed with a warning") {
        const auto b = build_catalog(full_seeds(), {}, {"age_seed"});
        CHECK_FALSE(b.catalog.contains("age_seed", SocialGroup::age));
        REQUIRE(b.warnings.size() == 2);
        CHECK(b.warnings[0].find("age_seed") != std::string::npos);
        CHECK(b.warnings[1].find("lost all seeds") != std::string::npos);
    }
    SUBCASE("a group without seeds is fatal") {
        auto s = full_seeds();
        s[SocialGroup::religion].clear();
        CHECK_THROWS_AS(build_catalog(s, {}, {}), ValidationError);
    }
    SUBCASE("scores stay in range") {
        CHECK_THROWS_AS(build_catalog(full_seeds(), {{{"x", SocialGroup::age, Origin::embedding, 1.5}}}, {}),
                        ValidationError);
    }
}

TEST_CASE("catalog save and load") {
    test::TempDir dir;
    const auto b = build_catalog(full_seeds(), {{{"moko", SocialGroup::age, Origin::embedding, 0.5}}}, {});
    b.catalog.save(dir / "keywords.jsonl");
    const auto back = KeywordCatalog::load(dir / "keywords.jsonl");
    CHECK(back.entries() == b.catalog.entries());
    CHECK(back.groups_of("moko") == std::vector<SocialGroup>{SocialGroup::age});
}

TEST_CASE("bundled seed file covers every group") {
    const auto seeds = load_seed_file(std::filesystem::path(LIBRA_DATA_DIR) / "seeds.json");
    for (auto g : kAllGroups) CHECK_FALSE(seeds.at(g).empty());
}
