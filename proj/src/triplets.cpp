#include "libra/triplets.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <set>
#include <tuple>

namespace libra::triplets {

namespace {

Tokens lower_tokens(const Tokens& tokens) {
    Tokens out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(utf8::lower(t));
    return out;
}

Tokens keyword_tokens(std::string_view keyword) { return lower_tokens(corpus::tokenize(keyword)); }

std::optional<std::size_t> find_run(const Tokens& haystack_lower, const Tokens& needle_lower) {
    if (needle_lower.empty() || needle_lower.size() > haystack_lower.size()) return std::nullopt;
    const auto it = std::search(haystack_lower.begin(), haystack_lower.end(), needle_lower.begin(), needle_lower.end());
    if (it == haystack_lower.end()) return std::nullopt;
    return static_cast<std::size_t>(it - haystack_lower.begin());
}

Tokens match_case(Tokens term, const Tokens& omega) {
    if (!term.empty() && !omega.empty() && utf8::starts_upper(omega.front())) term.front() = utf8::capitalize(term.front());
    return term;
}

Tokens tokens_field(const Json& j, const char* key) {
    const auto& v = j.at(key);
    if (!v.is_array()) throw ValidationError(std::string("field '") + key + "' must be a token array");
    return v.get<Tokens>();
}

}  // namespace

std::string_view to_string(Status s) {
    switch (s) {
        case Status::pending: return "pending";
        case Status::accepted: return "accepted";
        case Status::rejected: return "rejected";
        case Status::edited: return "edited";
    }
    return "";
}

Status status_from_string(std::string_view name) {
    for (Status s : {Status::pending, Status::accepted, Status::rejected, Status::edited})
        if (to_string(s) == name) return s;
    throw ValidationError("unknown triplet status '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Search

SentenceIndex index_sentences(const corpus::ArticleStore& store, const corpus::SentenceSplitter& splitter,
                              const corpus::Gazetteer* gazetteer) {
    SentenceIndex out;
    for (const auto& a : store.articles()) {
        auto sentences = splitter.split(a);
        if (gazetteer && !gazetteer->empty())
            for (auto& s : sentences) s = gazetteer->redact(s);
        out.emplace(a.id, std::move(sentences));
    }
    return out;
}

std::vector<CandidateSentence> search_sentences(const std::vector<clustering::ClusterProfile>& clusters,
                                                const keywords::KeywordCatalog& catalog, const SentenceIndex& sentences) {
    std::map<std::tuple<std::string, std::size_t, std::string>, CandidateSentence> hits;
    for (const auto& cluster : clusters) {
        if (cluster.groups.empty()) continue;
        std::vector<SocialGroup> groups(cluster.groups);
        std::sort(groups.begin(), groups.end());
        std::vector<std::tuple<SocialGroup, std::string, Tokens>> needles;
        for (auto g : groups)
            for (const auto& k : catalog.keywords(g)) needles.emplace_back(g, k, keyword_tokens(k));
        for (const auto& article_id : cluster.article_ids) {
            const auto it = sentences.find(article_id);
            if (it == sentences.end())
                throw ValidationError("cluster " + std::to_string(cluster.cluster_id) + " lists unknown article '" +
                                      article_id + "'");
            for (const auto& s : it->second) {
                const auto lowered = lower_tokens(s.tokens);
                for (const auto& [group, keyword, needle] : needles) {
                    if (!find_run(lowered, needle)) continue;
                    hits.try_emplace({s.article_id, s.index, keyword},
                                     CandidateSentence{s, keyword, group, cluster.cluster_id});
                }
            }
        }
    }
    std::vector<CandidateSentence> out;
    out.reserve(hits.size());
    for (auto& [key, c] : hits) out.push_back(std::move(c));
    return out;
}

Tokens SpanSplit::with(const Tokens& middle) const {
    Tokens out;
    out.reserve(u_left.size() + middle.size() + u_right.size());
    out.insert(out.end(), u_left.begin(), u_left.end());
    out.insert(out.end(), middle.begin(), middle.end());
    out.insert(out.end(), u_right.begin(), u_right.end());
    return out;
}

SpanSplit locate_target_span(const Tokens& tokens, std::string_view keyword) {
    const auto needle = keyword_tokens(keyword);
    const auto pos = find_run(lower_tokens(tokens), needle);
    if (!pos) throw ValidationError("keyword '" + std::string(keyword) + "' does not occur in the sentence");
    const auto begin = tokens.begin() + static_cast<std::ptrdiff_t>(*pos);
    const auto end = begin + static_cast<std::ptrdiff_t>(needle.size());
    return SpanSplit{Tokens(tokens.begin(), begin), Tokens(begin, end), Tokens(end, tokens.end())};
}

// ---------------------------------------------------------------------------
// Perturbation

AntonymMap::AntonymMap(const Json& j) {
    if (!j.is_object()) throw ValidationError("antonym map must be an object keyed by group id");
    for (const auto& [group, entries] : j.items()) {
        const auto g = keywords::group_from_id(group);
        if (!entries.is_object()) throw ValidationError("antonym entries for '" + group + "' must be an object");
        for (const auto& [k, v] : entries.items()) add(g, k, v.get<std::string>());
    }
}

AntonymMap AntonymMap::load(const std::filesystem::path& path) { return AntonymMap(read_json_file(path)); }

void AntonymMap::add(SocialGroup group, std::string keyword, std::string antonym) {
    auto k = keywords::normalize_keyword(keyword);
    auto a = keywords::normalize_keyword(antonym);
    if (k.empty() || a.empty()) throw ValidationError("empty antonym entry");
    if (k == a) throw ValidationError("'" + k + "' is listed as its own antonym");
    map_[group][std::move(k)] = std::move(a);
}

std::optional<std::string> AntonymMap::find(SocialGroup group, std::string_view keyword) const {
    const auto g = map_.find(group);
    if (g == map_.end()) return std::nullopt;
    const auto it = g->second.find(keywords::normalize_keyword(keyword));
    if (it == g->second.end()) return std::nullopt;
    return it->second;
}

Perturber::Perturber(const keywords::KeywordCatalog& catalog, AntonymMap antonyms, providers::EmbeddingProvider& embedder,
                     std::vector<std::string> unrelated_pool, std::uint64_t seed)
    : catalog_(catalog), antonyms_(std::move(antonyms)), embedder_(embedder), seed_(seed) {
    std::set<std::string> seen;
    for (auto& w : unrelated_pool) {
        auto n = keywords::normalize_keyword(w);
        if (!n.empty() && seen.insert(n).second) pool_.push_back(std::move(n));
    }
}

std::string Perturber::anti_term(std::string_view keyword, SocialGroup group) {
    const auto kw = keywords::normalize_keyword(keyword);
    if (auto a = antonyms_.find(group, kw)) return *a;

    std::lock_guard lock(mutex_);
    if (const auto it = anti_cache_.find({group, kw}); it != anti_cache_.end()) return it->second;
    auto members = catalog_.keywords(group);
    if (std::none_of(members.begin(), members.end(), [&](const auto& m) { return m != kw; }))
        throw ValidationError("no anti-stereotype candidate for '" + kw + "' in group " +
                              std::string(keywords::group_id(group)));
    auto& vecs = vectors_[group];
    if (vecs.empty()) {
        const auto embedded = providers::embed_batched(embedder_, members, 64, 1);
        for (std::size_t i = 0; i < members.size(); ++i) vecs.emplace(members[i], embedded[i]);
    }
    if (!vecs.contains(kw)) {
        const std::vector<std::string> one{kw};
        vecs.emplace(kw, embedder_.embed(one).at(0));
    }
    const auto& target = vecs.at(kw);
    std::string best;
    double best_sim = std::numeric_limits<double>::infinity();
    for (const auto& m : members) {  // members are sorted, so strict < keeps the lexicographic minimum
        if (m == kw) continue;
        const double sim = providers::cosine(target, vecs.at(m));
        if (sim < best_sim) {
            best_sim = sim;
            best = m;
        }
    }
    anti_cache_.emplace(std::pair{group, kw}, best);
    return best;
}

std::string Perturber::unrelated_term(std::string_view triplet_id, SocialGroup group) const {
    std::vector<const std::string*> allowed;
    for (const auto& w : pool_)
        if (!catalog_.contains(w, group)) allowed.push_back(&w);
    if (allowed.empty())
        throw ValidationError("unrelated pool has no term outside group " + std::string(keywords::group_id(group)));
    const auto h = splitmix64(seed_ ^ fnv1a64(triplet_id));
    return *allowed[h % allowed.size()];
}

Perturbation Perturber::perturb(std::string_view keyword, SocialGroup group, std::string_view triplet_id) {
    return {anti_term(keyword, group), unrelated_term(triplet_id, group)};
}

// ---------------------------------------------------------------------------
// Triplets

std::string triplet_id(std::string_view article_id, std::size_t sentence_index, std::string_view keyword) {
    std::string key(article_id);
    key += '\x1f';
    key += std::to_string(sentence_index);
    key += '\x1f';
    key += keywords::normalize_keyword(keyword);
    return sha256_hex(key).substr(0, 16);
}

Triplet assemble_triplet(const CandidateSentence& c, const SpanSplit& split, std::string_view anti,
                         std::string_view unrelated) {
    if (split.with(split.omega) != c.sentence.tokens)
        throw ValidationError("span split does not reconstruct sentence " + c.sentence.article_id + "#" +
                              std::to_string(c.sentence.index));
    Triplet t;
    t.id = triplet_id(c.sentence.article_id, c.sentence.index, c.keyword);
    t.group = c.group;
    t.keyword = keywords::normalize_keyword(c.keyword);
    t.split = split;
    t.anti_term = match_case(corpus::tokenize(anti), split.omega);
    t.unrelated_term = match_case(corpus::tokenize(unrelated), split.omega);
    t.source_article_id = c.sentence.article_id;
    if (t.anti_term.empty() || t.unrelated_term.empty()) throw ValidationError("empty replacement term for " + t.id);
    if (lower_tokens(t.anti_term) == lower_tokens(split.omega))
        throw ValidationError("anti-stereotype term equals the target span in " + t.id);
    return t;
}

Json to_json(const Triplet& t) {
    return Json{{"id", t.id},
                {"group", keywords::group_id(t.group)},
                {"keyword", t.keyword},
                {"context_left", t.split.u_left},
                {"target_stereo", t.split.omega},
                {"target_anti", t.anti_term},
                {"target_unrelated", t.unrelated_term},
                {"context_right", t.split.u_right},
                {"status", to_string(t.status)},
                {"kb_valid", t.kb_valid},
                {"source_article_id", t.source_article_id}};
}

Triplet triplet_from_json(const Json& j) {
    if (!j.is_object()) throw ValidationError("triplet record must be an object");
    Triplet t;
    t.id = j.at("id").get<std::string>();
    if (t.id.empty()) throw ValidationError("triplet id is empty");
    t.group = keywords::group_from_id(j.at("group").get<std::string>());
    t.keyword = j.at("keyword").get<std::string>();
    t.split.u_left = tokens_field(j, "context_left");
    t.split.omega = tokens_field(j, "target_stereo");
    t.anti_term = tokens_field(j, "target_anti");
    t.unrelated_term = tokens_field(j, "target_unrelated");
    t.split.u_right = tokens_field(j, "context_right");
    t.status = status_from_string(j.at("status").get<std::string>());
    t.kb_valid = j.at("kb_valid").get<bool>();
    t.source_article_id = j.at("source_article_id").get<std::string>();
    if (t.split.omega.empty() || t.anti_term.empty() || t.unrelated_term.empty())
        throw ValidationError("triplet " + t.id + " has an empty target");
    return t;
}

RenderedSentence render(const SpanSplit& split, const Tokens& middle) {
    if (middle.empty()) throw ValidationError("cannot render an empty target span");
    const auto d = corpus::detokenize_with_offsets(split.with(middle));
    return {d.text, d.spans[split.u_left.size()].first, d.spans[split.u_left.size() + middle.size() - 1].second};
}

Json review_json(const Triplet& t) {
    auto j = to_json(t);
    auto rendered = [&](const Tokens& middle) {
        const auto r = render(t.split, middle);
        return Json{{"text", r.text},
                    {"prefix", r.text.substr(0, r.span_begin)},
                    {"target", r.text.substr(r.span_begin, r.span_end - r.span_begin)},
                    {"suffix", r.text.substr(r.span_end)}};
    };
    j["sentences"] = Json{{"stereo", rendered(t.split.omega)},
                          {"anti", rendered(t.anti_term)},
                          {"unrelated", rendered(t.unrelated_term)}};
    return j;
}

// ---------------------------------------------------------------------------
// Review

namespace {

std::string describe(const std::vector<FieldError>& fields) {
    std::string out = "invalid verdict:";
    for (const auto& f : fields) out += " " + f.field + " (" + f.message + ");";
    out.pop_back();
    return out;
}

}  // namespace

VerdictValidationError::VerdictValidationError(std::vector<FieldError> fields)
    : ValidationError(describe(fields)), fields_(std::move(fields)) {}

StatusConflictError::StatusConflictError(const std::string& id, Status current)
    : ValidationError("triplet " + id + " is already " + std::string(to_string(current))), current_(current) {}

Verdict parse_verdict(const Json& body) {
    if (!body.is_object()) throw VerdictValidationError(std::vector<FieldError>{{"body", "must be a JSON object"}});
    std::vector<FieldError> errors;
    Verdict v;
    static const std::set<std::string> known = {"action", "edited_anti", "reviewer", "note"};
    for (const auto& [key, value] : body.items())
        if (!known.contains(key)) errors.push_back({key, "unknown field"});

    if (!body.contains("action")) {
        errors.push_back({"action", "required"});
    } else if (!body["action"].is_string()) {
        errors.push_back({"action", "must be one of accept, reject, edit"});
    } else {
        const auto a = body["action"].get<std::string>();
        if (a == "accept") v.action = Action::accept;
        else if (a == "reject") v.action = Action::reject;
        else if (a == "edit") v.action = Action::edit;
        else errors.push_back({"action", "must be one of accept, reject, edit"});
    }

    if (!body.contains("reviewer") || !body["reviewer"].is_string() || trim(body["reviewer"].get<std::string>()).empty())
        errors.push_back({"reviewer", "required non-empty string"});
    else
        v.reviewer = trim(body["reviewer"].get<std::string>());

    if (body.contains("note") && !body["note"].is_null()) {
        if (body["note"].is_string()) v.note = body["note"].get<std::string>();
        else errors.push_back({"note", "must be a string"});
    }

    const bool is_edit = body.contains("action") && body["action"] == "edit";
    if (body.contains("edited_anti") && !body["edited_anti"].is_null()) {
        const auto& e = body["edited_anti"];
        Tokens tokens;
        bool ok = true;
        if (e.is_string()) {
            tokens = corpus::tokenize(e.get<std::string>());
        } else if (e.is_array()) {
            for (const auto& t : e) {
                if (!t.is_string() || trim(t.get<std::string>()).empty()) {
                    ok = false;
                    break;
                }
                tokens.push_back(t.get<std::string>());
            }
        } else {
            ok = false;
        }
        if (!ok) errors.push_back({"edited_anti", "must be a string or an array of non-empty strings"});
        else if (tokens.empty()) errors.push_back({"edited_anti", "must not be empty"});
        else if (!is_edit) errors.push_back({"edited_anti", "only allowed with action edit"});
        else v.edited_anti = std::move(tokens);
    } else if (is_edit) {
        errors.push_back({"edited_anti", "required for action edit"});
    }

    if (!errors.empty()) throw VerdictValidationError(std::move(errors));
    return v;
}

Triplet apply_verdict(const Triplet& triplet, const Verdict& verdict) {
    if (triplet.status != Status::pending) throw StatusConflictError(triplet.id, triplet.status);
    Triplet out = triplet;
    switch (verdict.action) {
        case Action::accept: out.status = Status::accepted; break;
        case Action::reject: out.status = Status::rejected; break;
        case Action::edit:
            if (!verdict.edited_anti || verdict.edited_anti->empty())
                throw VerdictValidationError(std::vector<FieldError>{{"edited_anti", "required for action edit"}});
            if (lower_tokens(*verdict.edited_anti) == lower_tokens(triplet.split.omega))
                throw VerdictValidationError(std::vector<FieldError>{{"edited_anti", "must differ from the target span"}});
            out.anti_term = *verdict.edited_anti;
            out.status = Status::edited;
            break;
    }
    return out;
}

Json audit_record(const Triplet& before, const Triplet& after, const Verdict& verdict, std::string_view timestamp) {
    static constexpr std::string_view names[] = {"accept", "reject", "edit"};
    return Json{{"timestamp", timestamp},
                {"triplet_id", before.id},
                {"reviewer", verdict.reviewer},
                {"action", names[static_cast<int>(verdict.action)]},
                {"note", verdict.note},
                {"previous_status", to_string(before.status)},
                {"status", to_string(after.status)},
                {"previous_anti", before.anti_term},
                {"anti", after.anti_term}};
}

// ---------------------------------------------------------------------------
// Dataset

Dataset::Dataset(std::vector<Triplet> triplets) : triplets_(std::move(triplets)) { reindex(); }

void Dataset::reindex() {
    index_.clear();
    for (std::size_t i = 0; i < triplets_.size(); ++i)
        if (!index_.emplace(triplets_[i].id, i).second) throw ValidationError("duplicate triplet id " + triplets_[i].id);
}

const Triplet* Dataset::find(std::string_view id) const {
    const auto it = index_.find(id);
    return it == index_.end() ? nullptr : &triplets_[it->second];
}

std::map<SocialGroup, GroupCounts> Dataset::stats() const {
    std::map<SocialGroup, GroupCounts> out;
    for (const auto& t : triplets_) {
        auto& c = out[t.group];
        switch (t.status) {
            case Status::pending: ++c.pending; break;
            case Status::accepted: ++c.accepted; break;
            case Status::rejected: ++c.rejected; break;
            case Status::edited: ++c.edited; break;
        }
    }
    return out;
}

std::string Dataset::serialize() const {
    std::string out;
    for (const auto& t : triplets_) {
        out += to_json(t).dump();
        out += '\n';
    }
    return out;
}

void Dataset::save(const std::filesystem::path& path) const { write_file_atomic(path, serialize()); }

Dataset Dataset::parse(std::string_view text) {
    std::vector<Triplet> out;
    std::size_t line_no = 0;
    for (const auto& line : split(text, '\n')) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            out.push_back(triplet_from_json(Json::parse(line)));
        } catch (const Json::exception& e) {
            throw ValidationError("triplets line " + std::to_string(line_no) + ": " + e.what());
        } catch (const ValidationError& e) {
            throw ValidationError("triplets line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return Dataset(std::move(out));
}

Dataset Dataset::load(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw UpstreamMissingError(path.string(), "build-triplets");
    return parse(read_file(path));
}

void Dataset::merge_review_state(const Dataset& previous) {
    for (auto& t : triplets_) {
        const auto* old = previous.find(t.id);
        if (!old) continue;
        t.status = old->status;
        t.kb_valid = old->kb_valid;
        if (old->status == Status::edited) t.anti_term = old->anti_term;
    }
}

bool eligible(const Triplet& t, bool include_pending) {
    if (!t.kb_valid) return false;
    switch (t.status) {
        case Status::accepted:
        case Status::edited: return true;
        case Status::pending: return include_pending;
        case Status::rejected: return false;
    }
    return false;
}

TripletStore::TripletStore(std::filesystem::path dataset_path, std::filesystem::path audit_path)
    : dataset_path_(std::move(dataset_path)), audit_path_(std::move(audit_path)),
      current_(std::make_shared<const Dataset>(Dataset::load(dataset_path_))) {}

std::shared_ptr<const Dataset> TripletStore::snapshot() const {
    std::lock_guard lock(snapshot_mutex_);
    return current_;
}

Triplet TripletStore::submit(std::string_view id, const Verdict& verdict) {
    std::lock_guard writer(writer_mutex_);
    const auto snap = snapshot();
    const auto* before = snap->find(id);
    if (!before) throw NotFoundError("unknown triplet '" + std::string(id) + "'");
    const auto after = apply_verdict(*before, verdict);

    auto next = std::make_shared<Dataset>(*snap);
    for (auto& t : next->mutable_triplets())
        if (t.id == after.id) t = after;
    next->save(dataset_path_);
    {
        std::ofstream audit(audit_path_, std::ios::app | std::ios::binary);
        if (!audit) throw Error("cannot append to " + audit_path_.string());
        audit << audit_record(*before, after, verdict, utc_timestamp()).dump() << '\n';
    }
    std::lock_guard lock(snapshot_mutex_);
    current_ = std::move(next);
    return after;
}

BuildResult build_triplets(const std::vector<CandidateSentence>& candidates, Perturber& perturber) {
    BuildResult out;
    std::vector<Triplet> triplets;
    for (const auto& c : candidates) {
        try {
            const auto split = locate_target_span(c.sentence.tokens, c.keyword);
            const auto id = triplet_id(c.sentence.article_id, c.sentence.index, c.keyword);
            const auto p = perturber.perturb(c.keyword, c.group, id);
            triplets.push_back(assemble_triplet(c, split, p.anti, p.unrelated));
        } catch (const ValidationError& e) {
            out.warnings.push_back(c.sentence.article_id + "#" + std::to_string(c.sentence.index) + " '" + c.keyword +
                                   "': " + e.what());
        }
    }
    out.dataset = Dataset(std::move(triplets));
    return out;
}

}  // namespace libra::triplets
