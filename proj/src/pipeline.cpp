#include "libra/pipeline.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>

#include "libra/clustering.hpp"
#include "libra/corpus.hpp"
#include "libra/errors.hpp"
#include "libra/kboundary.hpp"
#include "libra/manifest.hpp"
#include "libra/metrics.hpp"
#include "libra/prompts.hpp"
#include "libra/scoring.hpp"
#include "libra/stubs.hpp"

namespace libra::pipeline {

namespace fs = std::filesystem;
using config::RunConfig;

PendingReviewGate::PendingReviewGate(std::size_t pending)
    : ValidationError("pending review: " + std::to_string(pending) +
                      " triplet(s) await expert review; review them with `libra review-serve` or rerun with "
                      "--allow-pending"),
      pending_(pending) {}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const UpstreamMissingError*>(&e)) return kUpstreamMissing;
    if (dynamic_cast<const ProviderError*>(&e)) return kProviderFailure;
    return kValidation;
}

Paths paths_for(const RunConfig& config) {
    Paths p;
    p.out = config.output_dir();
    p.corpus_dir = p.out / "corpus";
    p.articles = p.corpus_dir / "articles.jsonl";
    p.keywords = p.out / "keywords.jsonl";
    p.keywords_report = p.out / "keywords_report.json";
    p.embeddings = p.out / "embeddings.jsonl";
    p.clusters = p.out / "clusters.json";
    p.cluster_report = p.out / "cluster_report.json";
    p.candidates = p.out / "candidates.jsonl";
    p.triplets = p.out / "triplets.jsonl";
    p.build_report = p.out / "build_report.json";
    p.audit = p.out / "audit.jsonl";
    p.kb_report = p.out / "kb_report.json";
    p.scores = p.out / "scores.jsonl";
    p.scores_partial = p.out / "scores.partial.jsonl";
    p.report_json = p.out / "report.json";
    p.report_md = p.out / "report.md";
    p.density = p.out / "density.csv";
    p.manifest = p.out / "manifest.jsonl";
    return p;
}

namespace {

void log_line(const Options& o, const std::string& line) {
    if (o.log) *o.log << line << '\n';
}

std::vector<fs::path> present(std::initializer_list<std::optional<fs::path>> paths) {
    std::vector<fs::path> out;
    for (const auto& p : paths)
        if (p) out.push_back(*p);
    return out;
}

struct StageSpec {
    std::string command;
    std::vector<fs::path> inputs;
    std::vector<fs::path> outputs;
    manifest::FileHashes extra_inputs;
    std::string salt;  // option values that change the result without changing the config
};

template <class Body>
StageResult run_stage(const RunConfig& config, const Options& options, StageSpec spec, Body&& body) {
    const auto paths = paths_for(config);
    fs::create_directories(paths.out);
    const manifest::Manifest m(paths.manifest);
    auto inputs = manifest::hash_files(spec.inputs, paths.out);
    for (auto& [k, v] : spec.extra_inputs) inputs[k] = v;
    const auto config_sha = spec.salt.empty() ? config.hash() : sha256_hex(config.hash() + "\n" + spec.salt);

    StageResult result;
    result.command = spec.command;
    if (!options.force && m.up_to_date(spec.command, config_sha, inputs, paths.out)) {
        result.skipped = true;
        log_line(options, spec.command + ": up to date");
        return result;
    }
    const auto start = std::chrono::steady_clock::now();
    body(result);
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
    manifest::Entry e{spec.command, config_sha, inputs, manifest::hash_files(spec.outputs, paths.out), result.counts,
                      elapsed.count()};
    m.append(e);
    for (const auto& w : result.warnings) log_line(options, spec.command + ": warning: " + w);
    log_line(options, spec.command + ": " + result.counts.dump());
    return result;
}


corpus::SentenceSplitter make_splitter(const RunConfig& c) {
    if (const auto p = c.path("corpus.abbreviations")) return corpus::SentenceSplitter(*p);
    return corpus::SentenceSplitter();
}

triplets::SentenceIndex load_sentences(const RunConfig& c, const corpus::ArticleStore& store) {
    const auto splitter = make_splitter(c);
    std::optional<corpus::Gazetteer> gazetteer;
    if (const auto p = c.path("corpus.gazetteer")) gazetteer.emplace(read_word_list(*p));
    return triplets::index_sentences(store, splitter, gazetteer ? &*gazetteer : nullptr);
}

keywords::Stopwords make_stopwords(const RunConfig& c) {
    if (const auto p = c.path("keywords.stopwords")) return keywords::Stopwords(*p);
    return keywords::Stopwords();
}

kboundary::Glossary load_glossary_if_any(const RunConfig& c) {
    const auto p = c.path("kboundary.glossary");
    if (!p) return {};
    return kboundary::load_glossary(*p);
}

std::size_t role_in_flight(const RunConfig& c, std::string_view role) {
    return c.at("providers." + std::string(role) + ".max_in_flight").get<std::size_t>();
}

std::uint64_t role_seed(const RunConfig& c, std::string_view role) {
    const auto& s = c.at("providers." + std::string(role) + ".seed");
    return s.is_null() ? c.seed() : s.get<std::uint64_t>();
}

std::shared_ptr<providers::Transport> make_transport(const RunConfig& c, std::string_view role) {
    const auto& p = c.at("providers." + std::string(role));
    const auto kind = p.at("kind").get<std::string>();
    if (kind == "offline") return std::make_shared<providers::OfflineTransport>(*c.path("providers." + std::string(role) + ".cache"));
    providers::ProviderEndpoint ep;
    ep.base_url = p.at("base_url").get<std::string>();
    ep.model_id = p.at("model_id").get<std::string>();
    ep.timeout = std::chrono::milliseconds(p.at("timeout_ms").get<std::int64_t>());
    ep.max_in_flight = p.at("max_in_flight").get<std::size_t>();
    ep.retries = p.at("retries").get<std::size_t>();
    ep.backoff = std::chrono::milliseconds(p.at("backoff_ms").get<std::int64_t>());
    if (const auto& env = p.at("bearer_token_env"); !env.is_null()) {
        const char* token = std::getenv(env.get<std::string>().c_str());
        if (!token) throw ValidationError("environment variable " + env.get<std::string>() + " is not set");
        ep.bearer_token = token;
    }
    auto http = std::make_shared<providers::HttpTransport>(ep);
    if (kind == "record")
        return std::make_shared<providers::RecordingTransport>(http, *c.path("providers." + std::string(role) + ".cache"));
    return http;
}

std::string transport_model(const RunConfig& c, std::string_view role) {
    const auto& m = c.at("providers." + std::string(role) + ".model_id");
    return m.is_null() ? std::string() : m.get<std::string>();
}

std::vector<stubs::SentenceTriple> theoretical_dataset(const ProviderContext& ctx) {
    std::vector<stubs::SentenceTriple> out;
    if (!ctx.dataset) throw ValidationError("theoretical stubs need the triplet dataset");
    for (const auto& t : ctx.dataset->triplets())
        if (triplets::eligible(t, ctx.include_pending))
            out.push_back({t.stereo_tokens(), t.anti_tokens(), t.unrelated_tokens()});
    return out;
}

std::optional<stubs::TheoreticalKind> theoretical_kind(std::string_view stub) {
    if (stub == "ideal_lm") return stubs::TheoreticalKind::ideal;
    if (stub == "local_ideal_lm") return stubs::TheoreticalKind::local_ideal;
    if (stub == "stereotyped_lm") return stubs::TheoreticalKind::stereotyped;
    return std::nullopt;
}

std::map<std::string, std::vector<std::string>> word_groups(const keywords::KeywordCatalog* catalog) {
    std::map<std::string, std::vector<std::string>> out;
    if (!catalog) return out;
    for (const auto& e : catalog->entries()) {
        if (e.origin != keywords::Origin::seed) continue;
        auto& v = out[e.keyword];
        const std::string id(keywords::group_id(e.group));
        if (std::find(v.begin(), v.end(), id) == v.end()) v.push_back(id);
    }
    return out;
}

Json candidate_json(const triplets::CandidateSentence& c) {
    return Json{{"article_id", c.sentence.article_id},
                {"sentence_index", c.sentence.index},
                {"keyword", c.keyword},
                {"group", keywords::group_id(c.group)},
                {"cluster_id", c.cluster_id},
                {"text", c.sentence.text},
                {"tokens", c.sentence.tokens},
                {"redacted", c.sentence.redacted}};
}

std::string dataset_review_state_sha(const triplets::Dataset& d) {
    auto copy = d;
    kboundary::reset_validity(copy);
    return sha256_hex(copy.serialize());
}

bool include_pending_for(const RunConfig& c, const Options& o) {
    return o.include_pending.value_or(c.at("scoring.include_pending").get<bool>());
}

}  // namespace

// ---------------------------------------------------------------------------
// Providers

std::string model_name(const RunConfig& c, std::string_view role) {
    const auto& p = c.at("providers." + std::string(role));
    if (!p.at("model_id").is_null()) return p.at("model_id").get<std::string>();
    return p.at("stub").is_null() ? std::string(role) : p.at("stub").get<std::string>();
}

std::shared_ptr<providers::LogprobProvider> make_logprob_provider(const RunConfig& c, const ProviderContext& ctx) {
    const auto& p = c.at("providers.logprob");
    if (p.at("kind") != "stub") return std::make_shared<providers::LogprobClient>(make_transport(c, "logprob"), transport_model(c, "logprob"));
    const auto stub = p.at("stub").get<std::string>();
    if (stub == "unigram") return std::make_shared<stubs::UnigramScorer>(role_seed(c, "logprob"));
    if (stub == "random_lm") return std::make_shared<stubs::RandomLM>(role_seed(c, "logprob"));
    if (const auto kind = theoretical_kind(stub))
        return std::make_shared<stubs::TheoreticalLM>(*kind, theoretical_dataset(ctx), ctx.glossary);
    throw ValidationError("stub '" + stub + "' cannot serve logprobs");
}

std::shared_ptr<providers::EmbeddingProvider> make_embedding_provider(const RunConfig& c) {
    const auto& p = c.at("providers.embedding");
    if (p.at("kind") != "stub")
        return std::make_shared<providers::EmbeddingClient>(make_transport(c, "embedding"), transport_model(c, "embedding"));
    const auto stub = p.at("stub").get<std::string>();
    if (stub == "hash_embedder")
        return std::make_shared<stubs::HashEmbedder>(p.at("dim").get<std::size_t>(), role_seed(c, "embedding"));
    throw ValidationError("stub '" + stub + "' cannot serve embeddings");
}

std::shared_ptr<providers::GenerationProvider> make_generation_provider(const RunConfig& c, std::string_view role,
                                                                        const ProviderContext& ctx) {
    const auto key = "providers." + std::string(role);
    const auto& p = c.at(key);
    if (p.at("kind") != "stub")
        return std::make_shared<providers::GenerationClient>(make_transport(c, role), transport_model(c, role));
    const auto stub = p.at("stub").get<std::string>();
    if (stub == "echo") return std::make_shared<stubs::EchoGenerator>();
    if (stub == "lexicon") return std::make_shared<stubs::LexiconGenerator>(word_groups(ctx.catalog), ctx.glossary);
    if (stub == "equality_judge") return std::make_shared<stubs::EqualityJudge>();
    if (stub == "random_lm") return std::make_shared<stubs::RandomLM>(role_seed(c, role));
    if (stub == "fixed") {
        if (p.at("reply").is_null()) throw ValidationError("'" + key + ".reply' is required for the fixed stub");
        return std::make_shared<stubs::FixedGenerator>(p.at("reply").get<std::string>());
    }
    if (const auto kind = theoretical_kind(stub))
        return std::make_shared<stubs::TheoreticalLM>(*kind, theoretical_dataset(ctx), ctx.glossary);
    throw ValidationError("stub '" + stub + "' cannot serve generation");
}

// ---------------------------------------------------------------------------
// Candidates I/O

void write_candidates(const fs::path& path, const std::vector<triplets::CandidateSentence>& candidates) {
    std::vector<Json> records;
    records.reserve(candidates.size());
    for (const auto& c : candidates) records.push_back(candidate_json(c));
    write_file_atomic(path, to_jsonl(records));
}

std::vector<triplets::CandidateSentence> read_candidates(const fs::path& path) {
    if (!fs::exists(path)) throw UpstreamMissingError(path.string(), "search");
    std::vector<triplets::CandidateSentence> out;
    const auto issues = read_jsonl(path, [&](std::size_t, const Json& j) {
        triplets::CandidateSentence c;
        c.sentence.article_id = j.at("article_id").get<std::string>();
        c.sentence.index = j.at("sentence_index").get<std::size_t>();
        c.sentence.text = j.at("text").get<std::string>();
        c.sentence.tokens = j.at("tokens").get<std::vector<std::string>>();
        c.sentence.redacted = j.value("redacted", false);
        c.keyword = j.at("keyword").get<std::string>();
        c.group = keywords::group_from_id(j.at("group").get<std::string>());
        c.cluster_id = j.at("cluster_id").get<int>();
        out.push_back(std::move(c));
    });
    if (!issues.empty())
        throw ValidationError(path.string() + ":" + std::to_string(issues.front().line) + ": " + issues.front().message);
    return out;
}

// ---------------------------------------------------------------------------
// Commands

StageResult run_ingest(const RunConfig& c, const Options& o) {
    const auto corpus_path = c.path("corpus.path");
    if (!corpus_path) throw ValidationError("'corpus.path' is required for ingest");
    if (!fs::exists(*corpus_path)) throw ValidationError("corpus not found: " + corpus_path->string());
    const auto paths = paths_for(c);
    std::vector<fs::path> inputs;
    if (fs::is_directory(*corpus_path)) {
        for (const auto& e : fs::recursive_directory_iterator(*corpus_path))
            if (e.is_regular_file() && e.path().extension() == ".txt") inputs.push_back(e.path());
    } else {
        inputs.push_back(*corpus_path);
    }
    return run_stage(c, o, {"ingest", inputs, {paths.articles, paths.corpus_dir / "manifest.json"}, {}, {}},
                     [&](StageResult& r) {
                         std::vector<corpus::FilterRule> filters;
                         for (const auto& f : c.at("corpus.filters")) filters.push_back(corpus::FilterRule::from_json(f));
                         auto ingest = corpus::ingest_articles(
                             *corpus_path, corpus::input_format_from_string(c.at("corpus.format").get<std::string>()),
                             filters);
                         if (ingest.store.empty()) throw ValidationError("no articles left after filtering");
                         Json malformed = Json::array();
                         for (const auto& m : ingest.report.malformed) {
                             malformed.push_back(Json{{"line", m.line}, {"message", m.message}});
                             r.warnings.push_back("line " + std::to_string(m.line) + ": " + m.message);
                         }
                         Json by_rule = Json::object();
                         for (const auto& [rule, n] : ingest.report.dropped_by_rule) by_rule[rule] = n;
                         ingest.store.save(paths.corpus_dir, Json{{"kept", ingest.report.kept},
                                                                  {"dropped", ingest.report.dropped},
                                                                  {"dropped_by_rule", by_rule},
                                                                  {"malformed", malformed}});
                         r.counts = Json{{"kept", ingest.report.kept},
                                         {"dropped", ingest.report.dropped},
                                         {"malformed", ingest.report.malformed.size()}};
                     });
}

StageResult run_keywords(const RunConfig& c, const Options& o) {
    const auto paths = paths_for(c);
    const auto seeds_path = c.path("keywords.seeds");
    if (!seeds_path) throw ValidationError("'keywords.seeds' is required");
    return run_stage(
        c, o,
        {"keywords",
         present({paths.articles, seeds_path, c.path("keywords.blocklist"), c.path("keywords.stopwords")}),
         {paths.keywords, paths.keywords_report},
         {},
         {}},
        [&](StageResult& r) {
            const auto store = corpus::ArticleStore::load(paths.corpus_dir);
            const auto seeds = keywords::load_seed_file(*seeds_path);
            const auto base = keywords::catalog_from_seeds(seeds);
            const auto stopwords = make_stopwords(c);
            const auto index = load_sentences(c, store);
            std::vector<corpus::Sentence> sentences;
            for (const auto& [id, list] : index) sentences.insert(sentences.end(), list.begin(), list.end());

            std::vector<std::vector<keywords::KeywordEntry>> expansions;
            std::size_t n_embedding = 0, n_association = 0;
            if (c.at("keywords.expansion.enabled").get<bool>()) {
                std::map<std::string, std::size_t> freq;
                for (const auto& s : sentences)
                    for (const auto& t : s.tokens)
                        if (kboundary::is_alphabetic(t)) ++freq[utf8::lower(t)];
                std::vector<std::string> vocab;
                const auto min_count = c.at("keywords.expansion.min_count").get<std::size_t>();
                for (const auto& [w, n] : freq)
                    if (n >= min_count && w.size() > 1 && !stopwords.contains(w)) vocab.push_back(w);
                auto embedder = make_embedding_provider(c);
                keywords::ExpansionParams ep;
                ep.k = c.at("keywords.expansion.k").get<std::size_t>();
                ep.min_sim = c.at("keywords.expansion.min_sim").get<double>();
                ep.batch_size = c.at("keywords.expansion.batch_size").get<std::size_t>();
                ep.max_in_flight = role_in_flight(c, "embedding");
                expansions.push_back(keywords::expand_by_embedding(base, vocab, *embedder, ep));
                n_embedding = expansions.back().size();
            }
            if (c.at("keywords.association.enabled").get<bool>()) {
                keywords::AssociationParams ap;
                ap.min_support = c.at("keywords.association.min_support").get<std::size_t>();
                ap.min_conf = c.at("keywords.association.min_conf").get<double>();
                expansions.push_back(keywords::mine_associations(sentences, base, ap, stopwords));
                n_association = expansions.back().size();
            }
            std::vector<std::string> blocklist;
            if (const auto b = c.path("keywords.blocklist")) blocklist = read_word_list(*b);
            auto build = keywords::build_catalog(seeds, expansions, blocklist);
            build.catalog.save(paths.keywords);
            Json per_group = Json::object();
            for (const auto& [g, n] : build.catalog.counts()) per_group[std::string(keywords::group_id(g))] = n;
            write_file_atomic(paths.keywords_report, Json{{"keywords", build.catalog.size()},
                                                          {"per_group", per_group},
                                                          {"embedding_candidates", n_embedding},
                                                          {"association_candidates", n_association},
                                                          {"warnings", build.warnings}}
                                                         .dump(2) +
                                                         "\n");
            r.warnings = build.warnings;
            r.counts = Json{{"keywords", build.catalog.size()},
                            {"embedding_candidates", n_embedding},
                            {"association_candidates", n_association}};
        });
}

StageResult run_cluster(const RunConfig& c, const Options& o) {
    const auto paths = paths_for(c);
    const auto external = c.path("clustering.external_labels");
    return run_stage(
        c, o,
        {"cluster",
         present({paths.articles, paths.keywords, external, c.path("clustering.summarize_prompt"),
                  c.path("clustering.allocate_prompt")}),
         {paths.embeddings, paths.clusters, paths.cluster_report},
         {},
         {}},
        [&](StageResult& r) {
            const auto store = corpus::ArticleStore::load(paths.corpus_dir);
            const auto catalog = keywords::KeywordCatalog::load(paths.keywords);
            Json report = Json::object();
            std::vector<clustering::ClusterProfile> profiles;
            if (external) {
                const auto labels = clustering::load_external_labels(*external);
                for (const auto& [id, _] : labels)
                    if (!store.find(id)) throw ValidationError("external label for unknown article '" + id + "'");
                profiles = clustering::profiles_from_labels(labels);
                report["source"] = "external";
                report["labelled"] = labels.size();
            } else {
                auto embedder = make_embedding_provider(c);
                const auto embeddings = clustering::embed_articles(
                    store, *embedder, c.at("clustering.batch_size").get<std::size_t>(), role_in_flight(c, "embedding"));
                clustering::save_embeddings(paths.embeddings, embeddings);
                std::size_t dims = c.at("clustering.dims").get<std::size_t>();
                const std::size_t limit = std::min(embeddings.size() - 1, embeddings.front().vector.size());
                if (dims > limit) {
                    r.warnings.push_back("reducing to " + std::to_string(limit) + " dimensions instead of " +
                                         std::to_string(dims));
                    dims = limit;
                }
                auto reduced = clustering::reduce_dims(embeddings, dims);
                auto points = c.at("clustering.normalize").get<bool>() ? clustering::normalize_rows(reduced.embeddings)
                                                                       : reduced.embeddings;
                const auto dbscan = clustering::cluster_articles(points, c.at("clustering.eps").get<double>(),
                                                                 c.at("clustering.min_pts").get<std::size_t>());
                report["source"] = "dbscan";
                report["dims"] = dims;
                report["retained_variance_ratio"] = reduced.retained_variance_ratio;
                report["clusters"] = dbscan.centroids.size();
                report["noise_before"] = dbscan.noise_count();
                auto labels = dbscan.labels;
                if (dbscan.centroids.empty()) {
                    r.warnings.push_back("every article is noise; lower clustering.min_pts or raise clustering.eps");
                } else {
                    const auto assigned = clustering::assign_noise(dbscan, points,
                                                                   c.at("clustering.max_noise_rounds").get<std::size_t>());
                    labels = assigned.assignment.labels;
                    report["noise_rounds"] = assigned.rounds;
                }
                profiles = clustering::profiles_from_labels(labels);
            }

            ProviderContext ctx;
            ctx.catalog = &catalog;
            auto generator = make_generation_provider(c, "generation", ctx);
            const auto summarize = prompts::load(prompts::Task::summarize, c.path("clustering.summarize_prompt"));
            const auto allocate = prompts::load(prompts::Task::allocate, c.path("clustering.allocate_prompt"));
            clustering::SummaryParams sp{c.at("clustering.chunk_tokens").get<std::size_t>()};
            std::vector<std::vector<std::string>> warnings(profiles.size());
            parallel_for(profiles.size(), role_in_flight(c, "generation"), [&](std::size_t i) {
                auto& p = profiles[i];
                p.summary = clustering::summarize_cluster(p, store, *generator, sp, summarize);
                if (prompts::flatten(p.summary).empty()) {
                    warnings[i].push_back("cluster " + std::to_string(p.cluster_id) + " has an empty summary");
                    return;
                }
                auto allocation = clustering::allocate_groups(p.summary, *generator, allocate);
                p.groups = allocation.groups;
                for (auto& w : allocation.warnings) warnings[i].push_back("cluster " + std::to_string(p.cluster_id) + ": " + w);
            });
            for (auto& w : warnings) r.warnings.insert(r.warnings.end(), w.begin(), w.end());
            clustering::save_profiles(paths.clusters, profiles);

            Json sizes = Json::object();
            std::size_t allocated = 0;
            for (const auto& p : profiles) {
                sizes[std::to_string(p.cluster_id)] = p.article_ids.size();
                if (!p.groups.empty()) ++allocated;
            }
            report["sizes"] = sizes;
            report["allocated_clusters"] = allocated;
            report["warnings"] = r.warnings;
            write_file_atomic(paths.cluster_report, report.dump(2) + "\n");
            r.counts = Json{{"clusters", profiles.size()}, {"allocated", allocated}};
        });
}

StageResult run_search(const RunConfig& c, const Options& o) {
    const auto paths = paths_for(c);
    return run_stage(c, o,
                     {"search",
                      present({paths.articles, paths.keywords, paths.clusters, c.path("corpus.abbreviations"),
                               c.path("corpus.gazetteer")}),
                      {paths.candidates},
                      {},
                      {}},
                     [&](StageResult& r) {
                         const auto store = corpus::ArticleStore::load(paths.corpus_dir);
                         const auto catalog = keywords::KeywordCatalog::load(paths.keywords);
                         const auto profiles = clustering::load_profiles(paths.clusters);
                         const auto index = load_sentences(c, store);
                         const auto candidates = triplets::search_sentences(profiles, catalog, index);
                         write_candidates(paths.candidates, candidates);
                         Json per_group = Json::object();
                         std::map<std::string, std::size_t> counts;
                         for (const auto& cand : candidates) ++counts[std::string(keywords::group_id(cand.group))];
                         for (const auto& [g, n] : counts) per_group[g] = n;
                         r.counts = Json{{"candidates", candidates.size()}, {"per_group", per_group}};
                     });
}

StageResult run_build_triplets(const RunConfig& c, const Options& o) {
    const auto paths = paths_for(c);
    const auto antonyms = c.path("triplets.antonyms");
    const auto pool = c.path("triplets.unrelated_pool");
    if (!pool) throw ValidationError("'triplets.unrelated_pool' is required");
    return run_stage(
        c, o, {"build-triplets", present({paths.candidates, paths.keywords, antonyms, pool}), {paths.build_report}, {}, {}},
        [&](StageResult& r) {
            const auto candidates = read_candidates(paths.candidates);
            const auto catalog = keywords::KeywordCatalog::load(paths.keywords);
            auto embedder = make_embedding_provider(c);
            triplets::Perturber perturber(catalog, antonyms ? triplets::AntonymMap::load(*antonyms) : triplets::AntonymMap(),
                                          *embedder, read_word_list(*pool), c.seed());
            auto built = triplets::build_triplets(candidates, perturber);
            std::size_t carried = 0;
            if (fs::exists(paths.triplets)) {
                const auto previous = triplets::Dataset::load(paths.triplets);
                built.dataset.merge_review_state(previous);
                for (const auto& t : built.dataset.triplets())
                    if (previous.find(t.id)) ++carried;
            }
            built.dataset.save(paths.triplets);
            r.warnings = built.warnings;
            r.counts = Json{{"triplets", built.dataset.size()},
                            {"skipped", built.warnings.size()},
                            {"carried_review_state", carried},
                            {"triplets_sha256", sha256_hex(built.dataset.serialize())}};
            write_file_atomic(paths.build_report, Json{{"counts", r.counts}, {"warnings", built.warnings}}.dump(2) + "\n");
        });
}

StageResult run_kb_probe(const RunConfig& c, const Options& o) {
    const auto paths = paths_for(c);
    const auto dictionary = c.path("kboundary.dictionary");
    if (!dictionary) throw ValidationError("'kboundary.dictionary' is required");
    manifest::FileHashes extra;
    if (fs::exists(paths.triplets))
        extra["triplets.jsonl#review-state"] = dataset_review_state_sha(triplets::Dataset::load(paths.triplets));
    return run_stage(
        c, o,
        {"kb-probe",
         present({dictionary, c.path("kboundary.glossary"), c.path("kboundary.p1"), c.path("kboundary.p2"),
                  fs::exists(paths.keywords) ? std::optional<fs::path>(paths.keywords) : std::nullopt}),
         {paths.triplets, paths.kb_report},
         extra,
         {}},
        [&](StageResult& r) {
            auto dataset = triplets::Dataset::load(paths.triplets);
            const auto dict = kboundary::Dictionary::load(*dictionary);
            const auto glossary = load_glossary_if_any(c);
            std::optional<keywords::KeywordCatalog> catalog;
            if (fs::exists(paths.keywords)) catalog = keywords::KeywordCatalog::load(paths.keywords);
            kboundary::reset_validity(dataset);
            const auto vocab = kboundary::extract_local_vocab(dataset, dict, glossary);

            ProviderContext ctx;
            ctx.catalog = catalog ? &*catalog : nullptr;
            ctx.dataset = &dataset;
            ctx.include_pending = true;
            ctx.glossary = glossary;
            auto prober = make_generation_provider(c, "prober", ctx);
            auto judge = make_generation_provider(c, "judge", ctx);
            const auto p1 = prompts::load(prompts::Task::define, c.path("kboundary.p1"));
            const auto p2 = prompts::load(prompts::Task::judge, c.path("kboundary.p2"));
            kboundary::ProbeParams pp{c.at("kboundary.max_in_flight").get<std::size_t>()};
            const auto results = kboundary::probe_words(vocab, *prober, *judge, pp, p1, p2);
            const double bbs = kboundary::compute_bbs(results);
            const auto invalidated = kboundary::mark_invalid(dataset, kboundary::failed_words(results));
            dataset.save(paths.triplets);
            const auto report = kboundary::kb_report(results, bbs, invalidated);
            write_file_atomic(paths.kb_report, report.dump(2) + "\n");
            for (const auto& r2 : results)
                if (r2.status == kboundary::ProbeStatus::unprobed) r.warnings.push_back("could not probe '" + r2.word + "'");
            std::size_t n_invalid = 0;
            for (const auto& t : dataset.triplets())
                if (!t.kb_valid) ++n_invalid;
            r.counts = Json{{"vocabulary", report["vocabulary_size"]}, {"glossed", report["glossed"]},
                            {"probed", report["probed"]},      {"matched", report["matched"]},
                            {"bbs", bbs},                      {"invalid_triplets", n_invalid}};
        });
}

StageResult run_score(const RunConfig& c, const Options& o) {
    const auto paths = paths_for(c);
    const bool include_pending = include_pending_for(c, o);
    return run_stage(
        c, o,
        {"score", present({paths.triplets, c.path("kboundary.glossary")}), {paths.scores}, {},
         include_pending ? "include_pending" : ""},
        [&](StageResult& r) {
            const auto dataset = triplets::Dataset::load(paths.triplets);
            ProviderContext ctx;
            ctx.dataset = &dataset;
            ctx.include_pending = include_pending;
            ctx.glossary = load_glossary_if_any(c);
            auto provider = make_logprob_provider(c, ctx);

            auto previous = scoring::read_scores(paths.scores);
            if (fs::exists(paths.scores_partial)) {
                // A crashed run may leave a torn last line; keep what parses.
                read_jsonl(paths.scores_partial, [&](std::size_t, const Json& j) {
                    previous.push_back(scoring::triplet_score_from_json(j));
                });
            }
            scoring::ScoreParams sp;
            sp.mode = providers::logprob_mode_from_string(c.at("mode").get<std::string>());
            sp.include_pending = include_pending;
            sp.max_in_flight = c.at("scoring.max_in_flight").get<std::size_t>();

            std::ofstream partial(paths.scores_partial, std::ios::app | std::ios::binary);
            const auto run = scoring::score_dataset(dataset, *provider, sp, previous, [&](const scoring::TripletScore& s) {
                partial << scoring::to_json(s).dump() << '\n';
                partial.flush();
            });
            partial.close();
            write_file_atomic(paths.scores, scoring::serialize_scores(run.scores));
            fs::remove(paths.scores_partial);
            r.counts = Json{{"scored", run.scores.size()},
                            {"reused", run.reused},
                            {"failed", run.failed},
                            {"skipped_rejected", run.skipped_rejected},
                            {"skipped_invalid_kb", run.skipped_invalid_kb},
                            {"skipped_pending", run.skipped_pending}};
            if (run.failed > 0) r.warnings.push_back(std::to_string(run.failed) + " triplet(s) could not be scored");
            if (!run.scores.empty() && run.failed == run.scores.size()) {
                std::string first;
                for (const auto& s : run.scores)
                    if (!s.error.empty()) {
                        first = s.error;
                        break;
                    }
                throw ProviderError("every triplet failed to score; first error: " + first);
            }
        });
}

StageResult run_metrics(const RunConfig& c, const Options& o) {
    const auto paths = paths_for(c);
    const auto scores_file = o.scores_file.value_or(paths.scores);
    const auto triplets_file = o.triplets_file.value_or(paths.triplets);
    const auto report_file = o.report_out.value_or(paths.report_json);
    const auto density_file = report_file.parent_path() / "density.csv";
    std::string salt;
    if (o.bbs) salt += "bbs=" + std::to_string(*o.bbs);
    if (o.scores_file) salt += ";scores=" + o.scores_file->string();
    if (o.report_out) salt += ";out=" + o.report_out->string();
    return run_stage(
        c, o,
        {"metrics", present({scores_file, o.bbs ? std::nullopt : std::optional<fs::path>(paths.kb_report), triplets_file}),
         {report_file, density_file}, {}, salt},
        [&](StageResult& r) {
            const auto scores = scoring::read_scores(scores_file, true);
            double bbs = 0;
            if (o.bbs) {
                bbs = *o.bbs;
            } else {
                if (!fs::exists(paths.kb_report)) throw UpstreamMissingError(paths.kb_report.string(), "kb-probe");
                bbs = read_json_file(paths.kb_report).at("bbs").get<double>();
            }
            metrics::ReportInputs in;
            in.model_id = model_name(c, "logprob");
            in.mode = scores.empty() ? providers::logprob_mode_from_string(c.at("mode").get<std::string>())
                                     : scores.front().mode;
            if (const auto& a = c.at("metrics.alpha"); !a.is_null()) in.alpha = a.get<double>();
            in.bins = c.at("metrics.bins").get<std::size_t>();
            in.epsilon = c.at("metrics.epsilon").get<double>();
            if (fs::exists(triplets_file)) {
                for (const auto& t : triplets::Dataset::load(triplets_file).triplets()) {
                    if (!t.kb_valid) ++in.n_invalid_kb;
                    if (t.status == triplets::Status::rejected) ++in.n_rejected;
                }
            }
            const auto report = metrics::compose_report(scores, bbs, in);
            fs::create_directories(report_file.parent_path());
            write_file_atomic(report_file, metrics::to_json(report).dump(2) + "\n");
            std::optional<double> bw;
            if (const auto& b = c.at("metrics.bandwidth"); !b.is_null()) bw = b.get<double>();
            const auto density = metrics::export_density(scores, bw);
            write_file_atomic(density_file, metrics::density_csv(density));
            r.warnings = density.warnings;
            r.counts = metrics::to_json(report).at("display");
        });
}

StageResult run_report(const RunConfig& c, const Options& o, std::string_view format) {
    const auto paths = paths_for(c);
    const auto report_file = o.report_out.value_or(paths.report_json);
    if (!fs::exists(report_file)) throw UpstreamMissingError(report_file.string(), "metrics");
    const auto report = metrics::metrics_report_from_json(read_json_file(report_file));
    StageResult r;
    r.command = "report";
    if (format == "json") {
        r.counts["text"] = read_file(report_file);
        return r;
    }
    if (format != "md") throw ValidationError("report format must be md or json");
    const auto md_file = report_file.parent_path() / "report.md";
    const auto text = metrics::markdown_row(report);
    auto staged = run_stage(c, o, {"report", {report_file}, {md_file}, {}, md_file.string()},
                            [&](StageResult&) { write_file_atomic(md_file, text); });
    staged.counts["text"] = text;
    return staged;
}

std::vector<StageResult> run_all(const RunConfig& c, const Options& o) {
    std::vector<StageResult> out;
    out.push_back(run_ingest(c, o));
    out.push_back(run_keywords(c, o));
    out.push_back(run_cluster(c, o));
    out.push_back(run_search(c, o));
    out.push_back(run_build_triplets(c, o));
    out.push_back(run_kb_probe(c, o));

    const auto dataset = triplets::Dataset::load(paths_for(c).triplets);
    std::size_t pending = 0;
    for (const auto& t : dataset.triplets())
        if (t.status == triplets::Status::pending) ++pending;
    auto scoring_options = o;
    if (pending > 0 && !include_pending_for(c, o)) {
        if (!o.allow_pending) throw PendingReviewGate(pending);
        scoring_options.include_pending = true;
    }
    out.push_back(run_score(c, scoring_options));
    out.push_back(run_metrics(c, o));
    out.push_back(run_report(c, o, "md"));
    return out;
}

}  // namespace libra::pipeline
