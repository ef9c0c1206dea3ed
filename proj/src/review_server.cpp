#include "libra/review_server.hpp"

#include <httplib.h>

#include <charconv>

namespace libra::review {

namespace {

void reply(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

Json field_errors(const std::vector<triplets::FieldError>& fields) {
    Json arr = Json::array();
    for (const auto& f : fields) arr.push_back(Json{{"field", f.field}, {"message", f.message}});
    return Json{{"error", "validation"}, {"fields", arr}};
}

std::optional<std::size_t> parse_count(const std::string& s) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

Json counts_json(const triplets::GroupCounts& c) {
    return Json{{"pending", c.pending}, {"accepted", c.accepted}, {"rejected", c.rejected}, {"edited", c.edited}};
}

}  // namespace

Json list_triplets(const triplets::Dataset& dataset, const std::map<std::string, std::string>& query) {
    std::vector<triplets::FieldError> errors;
    std::optional<triplets::Status> status;
    std::optional<keywords::SocialGroup> group;
    std::size_t limit = kDefaultPageSize, offset = 0;
    for (const auto& [key, value] : query) {
        if (key == "status") {
            if (value.empty() || value == "all") continue;
            try {
                status = triplets::status_from_string(value);
            } catch (const ValidationError&) {
                errors.push_back({"status", "must be pending, accepted, rejected, edited or all"});
            }
        } else if (key == "group") {
            if (value.empty()) continue;
            group = keywords::parse_group(value);
            if (!group) errors.push_back({"group", "unknown group '" + value + "'"});
        } else if (key == "limit") {
            const auto v = parse_count(value);
            if (!v || *v == 0 || *v > kMaxPageSize)
                errors.push_back({"limit", "must be an integer in [1, " + std::to_string(kMaxPageSize) + "]"});
            else limit = *v;
        } else if (key == "offset") {
            const auto v = parse_count(value);
            if (!v) errors.push_back({"offset", "must be a non-negative integer"});
            else offset = *v;
        } else {
            errors.push_back({key, "unknown query parameter"});
        }
    }
    if (!errors.empty()) throw triplets::VerdictValidationError(std::move(errors));

    Json items = Json::array();
    std::size_t total = 0;
    for (const auto& t : dataset.triplets()) {
        if (status && t.status != *status) continue;
        if (group && t.group != *group) continue;
        if (total >= offset && items.size() < limit) items.push_back(triplets::review_json(t));
        ++total;
    }
    return Json{{"total", total}, {"offset", offset}, {"limit", limit}, {"items", items}};
}

Json stats_json(const triplets::Dataset& dataset) {
    triplets::GroupCounts total;
    Json groups = Json::object();
    const auto stats = dataset.stats();
    for (auto g : keywords::kAllGroups) {
        const auto it = stats.find(g);
        const auto c = it == stats.end() ? triplets::GroupCounts{} : it->second;
        groups[std::string(keywords::group_id(g))] = counts_json(c);
        total.pending += c.pending;
        total.accepted += c.accepted;
        total.rejected += c.rejected;
        total.edited += c.edited;
    }
    return Json{{"total", counts_json(total)}, {"groups", groups}};
}

ReviewServer::ReviewServer(triplets::TripletStore& store, std::optional<std::filesystem::path> static_dir)
    : store_(store), server_(std::make_unique<httplib::Server>()) {
    server_->Get("/api/triplets", [this](const httplib::Request& req, httplib::Response& res) {
        std::map<std::string, std::string> query;
        for (const auto& [k, v] : req.params) query[k] = v;
        try {
            reply(res, 200, list_triplets(*store_.snapshot(), query));
        } catch (const triplets::VerdictValidationError& e) {
            reply(res, 422, field_errors(e.fields()));
        }
    });
    server_->Get(R"(/api/triplets/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        const auto snap = store_.snapshot();
        const auto* t = snap->find(req.matches[1].str());
        if (!t) return reply(res, 404, Json{{"error", "not found"}});
        reply(res, 200, triplets::review_json(*t));
    });
    server_->Post(R"(/api/triplets/([^/]+)/verdict)", [this](const httplib::Request& req, httplib::Response& res) {
        Json body;
        try {
            body = Json::parse(req.body);
        } catch (const Json::exception&) {
            return reply(res, 422, field_errors({{"body", "must be valid JSON"}}));
        }
        try {
            const auto verdict = triplets::parse_verdict(body);
            const auto after = store_.submit(req.matches[1].str(), verdict);
            reply(res, 200, triplets::review_json(after));
        } catch (const triplets::VerdictValidationError& e) {
            reply(res, 422, field_errors(e.fields()));
        } catch (const triplets::StatusConflictError& e) {
            reply(res, 409, Json{{"error", "conflict"}, {"message", e.what()}, {"status", triplets::to_string(e.current())}});
        } catch (const triplets::NotFoundError& e) {
            reply(res, 404, Json{{"error", "not found"}, {"message", e.what()}});
        } catch (const std::exception& e) {
            reply(res, 500, Json{{"error", "internal"}, {"message", e.what()}});
        }
    });
    server_->Get("/api/stats", [this](const httplib::Request&, httplib::Response& res) {
        reply(res, 200, stats_json(*store_.snapshot()));
    });
    if (static_dir) {
        if (!server_->set_mount_point("/", static_dir->string()))
            throw ValidationError("review UI directory not found: " + static_dir->string());
    }
}

ReviewServer::~ReviewServer() { stop(); }

int ReviewServer::bind(const std::string& host) { return server_->bind_to_any_port(host); }

bool ReviewServer::bind(const std::string& host, int port) { return server_->bind_to_port(host, port); }

void ReviewServer::serve() { server_->listen_after_bind(); }

void ReviewServer::stop() {
    if (server_) server_->stop();
}

}  // namespace libra::review
