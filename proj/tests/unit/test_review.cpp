#include "support.hpp"

#include <httplib.h>

#include <atomic>
#include <thread>

#include "libra/review_server.hpp"

using namespace libra;
using namespace libra::triplets;
using keywords::SocialGroup;

namespace {

Dataset toy_dataset() {
    std::vector<Triplet> ts;
    const std::vector<std::tuple<std::string, std::string, SocialGroup>> rows = {
        {"My karani lives here", "karani", SocialGroup::age},    {"The kuia spoke first", "kuia", SocialGroup::age},
        {"A nurse arrived late", "nurse", SocialGroup::gender},  {"The man cooked dinner", "man", SocialGroup::gender},
        {"Old people walk slowly", "old", SocialGroup::age},     {"Samoan families gathered", "samoan", SocialGroup::nationality},
    };
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& [text, kw, group] = rows[i];
        CandidateSentence c;
        c.sentence.article_id = "r";
        c.sentence.index = i;
        c.sentence.text = text;
        c.sentence.tokens = corpus::tokenize(text);
        c.keyword = kw;
        c.group = group;
        ts.push_back(assemble_triplet(c, locate_target_span(c.sentence.tokens, kw), "other", "spoon"));
    }
    return Dataset(ts);
}

struct Service {
    test::TempDir dir;
    std::unique_ptr<TripletStore> store;
    std::unique_ptr<review::ReviewServer> server;
    int port = 0;
    std::jthread thread;
    std::vector<std::string> ids;

    Service() {
        const auto ds = toy_dataset();
        for (const auto& t : ds.triplets()) ids.push_back(t.id);
        ds.save(dir / "triplets.jsonl");
        store = std::make_unique<TripletStore>(dir / "triplets.jsonl", dir / "audit.jsonl");
        server = std::make_unique<review::ReviewServer>(*store);
        port = server->bind("127.0.0.1");
        thread = std::jthread([this] { server->serve(); });
    }
    ~Service() { server->stop(); }

    httplib::Client client() const {
        httplib::Client c("127.0.0.1", port);
        c.set_read_timeout(5, 0);
        return c;
    }
    httplib::Result verdict(const std::string& id, const Json& body) const {
        return client().Post("/api/triplets/" + id + "/verdict", body.dump(), "application/json");
    }
};

Json accept() { return Json{{"action", "accept"}, {"reviewer", "expert"}}; }

}  // namespace

TEST_CASE("verdict round trip persists and audits") {
    Service s;
    auto res = s.verdict(s.ids[0], accept());
    REQUIRE(res);
    CHECK(res->status == 200);

    res = s.client().Get("/api/triplets/" + s.ids[0]);
    REQUIRE(res);
    CHECK(Json::parse(res->body).at("status") == "accepted");
    CHECK(Dataset::load(s.dir / "triplets.jsonl").find(s.ids[0])->status == Status::accepted);
    const auto audit = read_lines(s.dir / "audit.jsonl");
    REQUIRE(audit.size() == 1);
    CHECK(Json::parse(audit[0]).at("action") == "accept");

    res = s.verdict(s.ids[1], Json{{"action", "edit"}, {"reviewer", "expert"}, {"edited_anti", {"koro"}}});
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(Dataset::load(s.dir / "triplets.jsonl").find(s.ids[1])->anti_term == Tokens{"koro"});

    res = s.client().Get("/api/triplets/unknown");
    REQUIRE(res);
    CHECK(res->status == 404);
}

TEST_CASE("concurrent verdicts: one success, one conflict") {
    Service s;
    std::atomic<int> ok{0}, conflict{0};
    {
        std::jthread a([&] {
            auto r = s.verdict(s.ids[2], accept());
            if (r && r->status == 200) ++ok;
            if (r && r->status == 409) ++conflict;
        });
        std::jthread b([&] {
            auto r = s.verdict(s.ids[2], Json{{"action", "reject"}, {"reviewer", "other"}});
            if (r && r->status == 200) ++ok;
            if (r && r->status == 409) ++conflict;
        });
    }
    CHECK(ok == 1);
    CHECK(conflict == 1);
    CHECK(read_lines(s.dir / "audit.jsonl").size() == 1);
}

TEST_CASE("malformed verdicts get a field list") {
    Service s;
    auto res = s.verdict(s.ids[0], Json{{"action", "edit"}});
    REQUIRE(res);
    CHECK(res->status == 422);
    const auto body = Json::parse(res->body);
    std::set<std::string> fields;
    for (const auto& f : body.at("fields")) fields.insert(f.at("field").get<std::string>());
    CHECK(fields == std::set<std::string>{"reviewer", "edited_anti"});

    res = s.client().Post("/api/triplets/" + s.ids[0] + "/verdict", "{oops", "application/json");
    REQUIRE(res);
    CHECK(res->status == 422);
    CHECK(Dataset::load(s.dir / "triplets.jsonl").find(s.ids[0])->status == Status::pending);
}

TEST_CASE("stats and listing") {
    Service s;
    for (int i = 0; i < 3; ++i) REQUIRE(s.verdict(s.ids[i], accept())->status == 200);
    REQUIRE(s.verdict(s.ids[3], Json{{"action", "reject"}, {"reviewer", "expert"}})->status == 200);

    auto res = s.client().Get("/api/stats");
    REQUIRE(res);
    const auto stats = Json::parse(res->body);
    CHECK(stats.at("total").at("accepted") == 3);
    CHECK(stats.at("total").at("rejected") == 1);
    CHECK(stats.at("total").at("pending") == 2);
    CHECK(stats.at("groups").at("gender").at("rejected") == 1);

    res = s.client().Get("/api/triplets?status=pending&limit=1");
    REQUIRE(res);
    auto page = Json::parse(res->body);
    CHECK(page.at("total") == 2);
    CHECK(page.at("items").size() == 1);

    res = s.client().Get("/api/triplets?group=gender");
    page = Json::parse(res->body);
    CHECK(page.at("total") == 2);

    res = s.client().Get("/api/triplets?limit=0&status=maybe");
    REQUIRE(res);
    CHECK(res->status == 422);
    CHECK(Json::parse(res->body).at("fields").size() == 2);
}

TEST_CASE("listing helper pages in dataset order") {
    const auto ds = toy_dataset();
    const auto j = review::list_triplets(ds, {{"offset", "4"}, {"limit", "10"}});
    CHECK(j.at("total") == 6);
    REQUIRE(j.at("items").size() == 2);
    CHECK(j.at("items")[0].at("id") == ds.triplets()[4].id);
}
