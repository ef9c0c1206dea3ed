#include "support.hpp"

#include <atomic>

#include "libra/errors.hpp"
#include "libra/kboundary.hpp"
#include "libra/metrics.hpp"
#include "libra/stubs.hpp"

using namespace libra;
using namespace libra::kboundary;

namespace {

triplets::Triplet make(const std::string& text, const std::string& kw, const std::string& anti) {
    triplets::CandidateSentence c;
    c.sentence.article_id = "k";
    c.sentence.index = std::hash<std::string>{}(text) % 1000;
    c.sentence.text = text;
    c.sentence.tokens = corpus::tokenize(text);
    c.keyword = kw;
    return triplets::assemble_triplet(c, triplets::locate_target_span(c.sentence.tokens, kw), anti, "teapot");
}

class CountingJudge final : public providers::GenerationProvider {
public:
    std::string generate(const providers::GenerationRequest& r) override {
        ++calls;
        return inner.generate(r);
    }
    stubs::EqualityJudge inner;
    std::atomic<int> calls{0};
};

class ScriptedJudge final : public providers::GenerationProvider {
public:
    std::vector<std::string> replies;
    std::size_t next = 0;
    std::string generate(const providers::GenerationRequest&) override {
        return replies[std::min(next++, replies.size() - 1)];
    }
};

class FailingGenerator final : public providers::GenerationProvider {
public:
    std::string generate(const providers::GenerationRequest&) override { throw ProviderError("backend down"); }
};

ProbeResult result(ProbeStatus status, bool matched) {
    ProbeResult r;
    r.status = status;
    r.matched = matched;
    return r;
}

}  // namespace

TEST_CASE("variant stems") {
    const auto s = variant_stems("running");
    CHECK(std::find(s.begin(), s.end(), "run") != s.end());
    const Dictionary d({"run", "live", "city", "bake"});
    CHECK(d.covers("running"));
    CHECK(d.covers("lives"));
    CHECK(d.covers("cities"));
    CHECK(d.covers("baked"));
    CHECK(d.covers("Run"));
    CHECK_FALSE(d.covers("karani"));
}

TEST_CASE("local vocabulary extraction") {
    const Dictionary dict({"my", "live", "lives", "here", "koroua", "teapot"});
    triplets::Dataset ds({make("My karani lives here", "karani", "koroua")});
    const auto v = extract_local_vocab(ds, dict, {{"karani", "grandmother"}});
    REQUIRE(v.size() == 1);
    CHECK(v[0].word == "karani");
    CHECK(v[0].samples == std::vector<std::string>{"My karani lives here"});
    CHECK(v[0].official_definition == "grandmother");

    const Dictionary all({"my", "karani", "lives", "here", "koroua", "teapot"});
    CHECK(extract_local_vocab(ds, all).empty());

    SUBCASE("rejected triplets do not contribute") {
        ds.mutable_triplets()[0].status = triplets::Status::rejected;
        CHECK(extract_local_vocab(ds, dict).empty());
    }
}

TEST_CASE("definition probes and judging") {
    LocalWord w{"karani", {"My karani lives here"}, "grandmother"};
    stubs::LexiconGenerator lex({}, {{"karani", "grandmother"}});
    CHECK(probe_definition(w, lex) == "grandmother");
    stubs::FixedGenerator empty("");
    CHECK(probe_definition(w, empty).empty());
    CHECK_THROWS_AS(probe_definition(LocalWord{"karani", {}, "grandmother"}, lex), ValidationError);

    CountingJudge judge;
    CHECK(judge_match("grandmother", "grandmother", judge).matched);
    CHECK(judge.calls == 1);
    const auto e = judge_match("", "grandmother", judge);
    CHECK_FALSE(e.matched);
    CHECK_FALSE(e.judge_called);
    CHECK(judge.calls == 1);
    CHECK_FALSE(judge_match("a car", "grandmother", judge).matched);

    CHECK(parse_judgement("YES.") == true);
    CHECK(parse_judgement("no, they differ") == false);
    CHECK_FALSE(parse_judgement("perhaps").has_value());

    SUBCASE("one retry on an unparseable judge reply") {
        ScriptedJudge s;
        s.replies = {"hmm", "Yes"};
        CHECK(judge_match("a", "b", s).matched);
        ScriptedJudge bad;
        bad.replies = {"hmm"};
        CHECK_THROWS_AS(judge_match("a", "b", bad), ProviderError);
    }
}

TEST_CASE("bbs arithmetic") {
    std::vector<ProbeResult> four = {result(ProbeStatus::probed, true), result(ProbeStatus::probed, true),
                                     result(ProbeStatus::probed, true), result(ProbeStatus::probed, false)};
    CHECK(compute_bbs(four) == doctest::Approx(0.75));
    CHECK(compute_bbs({}) == 1.0);
    CHECK(compute_bbs({result(ProbeStatus::unglossed, false)}) == 1.0);
    CHECK(compute_bbs({result(ProbeStatus::probed, true), result(ProbeStatus::probed, true)}) == 1.0);
    four.push_back(result(ProbeStatus::unprobed, false));
    CHECK(compute_bbs(four) == doctest::Approx(0.75));
    CHECK_THROWS_AS(compute_bbs({result(ProbeStatus::unprobed, false)}), ProviderError);
}

TEST_CASE("provider failures leave words unprobed") {
    FailingGenerator down;
    stubs::EqualityJudge judge;
    const auto r = probe_words({{"karani", {"My karani lives here"}, "grandmother"}, {"zzz", {"zzz"}, std::nullopt}},
                               down, judge);
    CHECK(r[0].status == ProbeStatus::unprobed);
    CHECK(r[1].status == ProbeStatus::unglossed);
}

TEST_CASE("karani fixture: misdefinition invalidates every karani triplet") {
    auto ds = triplets::Dataset::load(test::fixture("karani/triplets.jsonl"));
    const auto dict = Dictionary::load(test::fixture("karani/dictionary.txt"));
    const auto glossary = load_glossary(test::fixture("karani/glossary.json"));
    const auto vocab = extract_local_vocab(ds, dict, glossary);
    REQUIRE(vocab.size() == 1);
    CHECK(vocab[0].word == "karani");

    stubs::FixedGenerator prober("a car");
    stubs::EqualityJudge judge;
    const auto results = probe_words(vocab, prober, judge);
    CHECK(compute_bbs(results) == 0.0);
    CHECK(failed_words(results) == std::vector<std::string>{"karani"});

    const auto counts = mark_invalid(ds, failed_words(results));
    CHECK(counts.at("karani") == 3);
    std::size_t invalid = 0;
    for (const auto& t : ds.triplets()) {
        bool has = false;
        for (const auto& toks : {t.stereo_tokens(), t.anti_tokens(), t.unrelated_tokens()})
            for (const auto& tok : toks)
                if (utf8::lower(tok) == "karani") has = true;
        CHECK(t.kb_valid == !has);
        if (!t.kb_valid) ++invalid;
    }
    CHECK(invalid == 3);
    CHECK(metrics::eicat(0.9, 0.2, 0.0) == 0.0);

    SUBCASE("an empty failure set changes nothing") {
        auto fresh = triplets::Dataset::load(test::fixture("karani/triplets.jsonl"));
        const auto before = fresh.serialize();
        CHECK(mark_invalid(fresh, {}).empty());
        CHECK(fresh.serialize() == before);
    }
    SUBCASE("reset restores validity") {
        reset_validity(ds);
        for (const auto& t : ds.triplets()) CHECK(t.kb_valid);
    }
    SUBCASE("a correct prober keeps bbs at 1") {
        stubs::LexiconGenerator good({}, glossary);
        CHECK(compute_bbs(probe_words(vocab, good, judge)) == 1.0);
    }
}

TEST_CASE("kb report lists unglossed words") {
    std::vector<ProbeResult> rs = {result(ProbeStatus::probed, false), result(ProbeStatus::unglossed, false)};
    rs[0].word = "karani";
    rs[1].word = "zzz";
    const auto j = kb_report(rs, 0.0, {{"karani", 3}});
    CHECK(j.at("bbs").get<double>() == 0.0);
    CHECK(j.dump().find("zzz") != std::string::npos);
}
