#include "libra/clustering.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "libra/errors.hpp"

namespace libra::clustering {

void save_embeddings(const std::filesystem::path& path, const std::vector<ArticleEmbedding>& embeddings) {
    std::vector<Json> records;
    records.reserve(embeddings.size());
    for (const auto& e : embeddings) records.push_back(Json{{"article_id", e.article_id}, {"vector", e.vector}});
    write_file_atomic(path, to_jsonl(records));
}

std::vector<ArticleEmbedding> load_embeddings(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw UpstreamMissingError(path.string(), "cluster");
    std::vector<ArticleEmbedding> out;
    const auto issues = read_jsonl(path, [&](std::size_t, const Json& j) {
        out.push_back({j.at("article_id").get<std::string>(), j.at("vector").get<std::vector<double>>()});
    });
    if (!issues.empty())
        throw ValidationError(path.string() + ":" + std::to_string(issues.front().line) + ": " + issues.front().message);
    return out;
}

std::vector<ArticleEmbedding> embed_articles(const corpus::ArticleStore& store, providers::EmbeddingProvider& embedder,
                                             std::size_t batch_size, std::size_t max_in_flight) {
    std::vector<std::string> texts;
    texts.reserve(store.size());
    for (const auto& a : store.articles()) texts.push_back(a.title + "\n" + a.body);
    const auto vecs = providers::embed_batched(embedder, texts, batch_size, max_in_flight);
    std::vector<ArticleEmbedding> out;
    out.reserve(vecs.size());
    for (std::size_t i = 0; i < vecs.size(); ++i) out.push_back({store.articles()[i].id, vecs[i]});
    return out;
}

namespace {

void check_uniform(const std::vector<ArticleEmbedding>& embeddings) {
    if (embeddings.empty()) return;
    const auto dim = embeddings.front().vector.size();
    for (const auto& e : embeddings) {
        if (e.vector.size() != dim)
            throw ValidationError("embedding for '" + e.article_id + "' has dimension " + std::to_string(e.vector.size()) +
                                  ", expected " + std::to_string(dim));
        for (double x : e.vector)
            if (!std::isfinite(x)) throw ValidationError("embedding for '" + e.article_id + "' is not finite");
    }
}

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Reduction

Reduction reduce_dims(const std::vector<ArticleEmbedding>& embeddings, std::size_t d) {
    check_uniform(embeddings);
    if (d < 2) throw ValidationError("target dimension must be >= 2");
    if (embeddings.size() < d + 1)
        throw ValidationError("need at least " + std::to_string(d + 1) + " embeddings to reduce to " + std::to_string(d) +
                              " dimensions, got " + std::to_string(embeddings.size()));
    const std::size_t dim = embeddings.front().vector.size();
    if (d > dim) throw ValidationError("target dimension " + std::to_string(d) + " exceeds input dimension " + std::to_string(dim));

    const auto n = static_cast<Eigen::Index>(embeddings.size());
    Eigen::MatrixXd x(n, static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < n; ++i)
        for (std::size_t j = 0; j < dim; ++j) x(i, static_cast<Eigen::Index>(j)) = embeddings[i].vector[j];
    const Eigen::RowVectorXd mean = x.colwise().mean();
    const Eigen::MatrixXd centered = x.rowwise() - mean;
    const Eigen::MatrixXd cov = (centered.adjoint() * centered) / static_cast<double>(n - 1);
    if (cov.trace() <= 0.0) throw ValidationError("degenerate covariance: all embeddings are identical");

    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw InternalError("eigen-decomposition of the covariance failed");
    // Eigen returns ascending eigenvalues; walk from the top.
    const auto total = static_cast<Eigen::Index>(dim);
    Eigen::MatrixXd basis(total, static_cast<Eigen::Index>(d));
    Reduction out;
    double retained = 0.0;
    double sum = 0.0;
    for (Eigen::Index k = 0; k < total; ++k) {
        const double ev = std::max(0.0, solver.eigenvalues()(total - 1 - k));
        out.eigenvalues.push_back(ev);
        sum += ev;
        if (k < static_cast<Eigen::Index>(d)) {
            Eigen::VectorXd v = solver.eigenvectors().col(total - 1 - k);
            Eigen::Index arg = 0;
            v.cwiseAbs().maxCoeff(&arg);
            if (v(arg) < 0) v = -v;
            basis.col(k) = v;
            retained += ev;
        }
    }
    out.retained_variance_ratio = sum > 0 ? retained / sum : 0.0;
    const Eigen::MatrixXd projected = centered * basis;
    out.embeddings.reserve(embeddings.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        ArticleEmbedding e{embeddings[i].article_id, std::vector<double>(d)};
        for (std::size_t j = 0; j < d; ++j) e.vector[j] = projected(i, static_cast<Eigen::Index>(j));
        out.embeddings.push_back(std::move(e));
    }
    return out;
}

std::vector<ArticleEmbedding> normalize_rows(std::vector<ArticleEmbedding> embeddings) {
    for (auto& e : embeddings) {
        double norm = 0;
        for (double x : e.vector) norm += x * x;
        if (norm <= 0) continue;
        norm = std::sqrt(norm);
        for (double& x : e.vector) x /= norm;
    }
    return embeddings;
}

// ---------------------------------------------------------------------------
// DBSCAN

std::size_t ClusterAssignment::noise_count() const {
    return static_cast<std::size_t>(
        std::count_if(labels.begin(), labels.end(), [](const auto& kv) { return kv.second == kNoise; }));
}

std::vector<std::string> ClusterAssignment::members(int cluster_id) const {
    std::vector<std::string> out;
    for (const auto& [id, label] : labels)
        if (label == cluster_id) out.push_back(id);
    return out;
}

std::map<int, std::vector<double>> compute_centroids(const std::map<std::string, int>& labels,
                                                     const std::vector<ArticleEmbedding>& embeddings) {
    std::map<int, std::vector<double>> sums;
    std::map<int, std::size_t> counts;
    // Sum in article-id order so centroids do not depend on input order.
    std::vector<const ArticleEmbedding*> sorted;
    for (const auto& e : embeddings) sorted.push_back(&e);
    std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->article_id < b->article_id; });
    for (const auto* e : sorted) {
        const auto it = labels.find(e->article_id);
        if (it == labels.end() || it->second == kNoise) continue;
        auto& s = sums[it->second];
        if (s.empty()) s.assign(e->vector.size(), 0.0);
        for (std::size_t i = 0; i < s.size(); ++i) s[i] += e->vector[i];
        ++counts[it->second];
    }
    for (auto& [id, s] : sums)
        for (double& x : s) x /= static_cast<double>(counts[id]);
    return sums;
}

ClusterAssignment cluster_articles(const std::vector<ArticleEmbedding>& embeddings, double eps, std::size_t min_pts) {
    if (!(eps > 0)) throw ValidationError("eps must be > 0");
    if (min_pts < 2) throw ValidationError("min_pts must be >= 2");
    check_uniform(embeddings);

    std::vector<const ArticleEmbedding*> pts;
    for (const auto& e : embeddings) pts.push_back(&e);
    std::sort(pts.begin(), pts.end(), [](auto* a, auto* b) { return a->article_id < b->article_id; });
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (pts[i]->article_id == pts[i - 1]->article_id)
            throw ValidationError("duplicate article id '" + pts[i]->article_id + "' in embeddings");

    const std::size_t n = pts.size();
    const double eps2 = eps * eps;
    std::vector<std::vector<std::size_t>> neighbours(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (squared_distance(pts[i]->vector, pts[j]->vector) <= eps2) neighbours[i].push_back(j);
    std::vector<bool> core(n);
    for (std::size_t i = 0; i < n; ++i) core[i] = neighbours[i].size() >= min_pts;

    // Expand clusters over core points; seeds visited in article-id order.
    std::vector<int> label(n, kNoise);
    int next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!core[i] || label[i] != kNoise) continue;
        const int id = next++;
        std::vector<std::size_t> stack{i};
        label[i] = id;
        while (!stack.empty()) {
            const auto p = stack.back();
            stack.pop_back();
            for (std::size_t q : neighbours[p]) {
                if (core[q] && label[q] == kNoise) {
                    label[q] = id;
                    stack.push_back(q);
                }
            }
        }
    }
    // Border points: nearest core neighbour, ties to the smaller article id.
    for (std::size_t i = 0; i < n; ++i) {
        if (core[i]) continue;
        double best = 0;
        std::optional<std::size_t> owner;
        for (std::size_t q : neighbours[i]) {
            if (!core[q]) continue;
            const double d = squared_distance(pts[i]->vector, pts[q]->vector);
            if (!owner || d < best) {
                best = d;
                owner = q;
            }
        }
        if (owner) label[i] = label[*owner];
    }
    // Cluster ids come from each cluster's first core point in id order, which
    // is also its smallest-id member core point; renumbering by smallest
    // member keeps ids independent of input order.
    std::map<int, std::size_t> first_member;
    for (std::size_t i = 0; i < n; ++i)
        if (label[i] != kNoise && !first_member.contains(label[i])) first_member[label[i]] = i;
    std::vector<std::pair<std::size_t, int>> order;
    for (const auto& [id, first] : first_member) order.emplace_back(first, id);
    std::sort(order.begin(), order.end());
    std::map<int, int> rename;
    for (std::size_t k = 0; k < order.size(); ++k) rename[order[k].second] = static_cast<int>(k);

    ClusterAssignment out;
    for (std::size_t i = 0; i < n; ++i) out.labels[pts[i]->article_id] = label[i] == kNoise ? kNoise : rename.at(label[i]);
    out.centroids = compute_centroids(out.labels, embeddings);
    return out;
}

NoiseAssignment assign_noise(const ClusterAssignment& assignment, const std::vector<ArticleEmbedding>& embeddings,
                             std::size_t max_rounds) {
    NoiseAssignment out{assignment, 0};
    std::vector<const ArticleEmbedding*> noise;
    for (const auto& e : embeddings) {
        const auto it = assignment.labels.find(e.article_id);
        if (it == assignment.labels.end())
            throw ValidationError("article '" + e.article_id + "' has an embedding but no label");
        if (it->second == kNoise) noise.push_back(&e);
    }
    if (noise.empty()) return out;
    if (assignment.centroids.empty()) throw ValidationError("cannot assign noise: every article is noise");

    std::sort(noise.begin(), noise.end(), [](auto* a, auto* b) { return a->article_id < b->article_id; });
    auto& labels = out.assignment.labels;
    auto centroids = assignment.centroids;
    for (std::size_t round = 0; round < max_rounds; ++round) {
        bool changed = false;
        for (const auto* e : noise) {
            int best_id = kNoise;
            double best = 0;
            for (const auto& [id, c] : centroids) {  // ascending id: strict < keeps the lower id on ties
                const double d = squared_distance(e->vector, c);
                if (best_id == kNoise || d < best) {
                    best = d;
                    best_id = id;
                }
            }
            if (labels[e->article_id] != best_id) {
                labels[e->article_id] = best_id;
                changed = true;
            }
        }
        out.rounds = round + 1;
        centroids = compute_centroids(labels, embeddings);
        if (!changed) break;
    }
    out.assignment.centroids = std::move(centroids);
    return out;
}

// ---------------------------------------------------------------------------
// Profiles

Json to_json(const ClusterProfile& p) {
    std::vector<std::string> groups;
    for (auto g : p.groups) groups.emplace_back(keywords::group_id(g));
    return Json{{"cluster_id", p.cluster_id}, {"article_ids", p.article_ids}, {"summary", p.summary}, {"groups", groups}};
}

ClusterProfile cluster_profile_from_json(const Json& j) {
    ClusterProfile p;
    p.cluster_id = j.at("cluster_id").get<int>();
    p.article_ids = j.at("article_ids").get<std::vector<std::string>>();
    p.summary = j.value("summary", std::string());
    for (const auto& g : j.value("groups", std::vector<std::string>())) p.groups.push_back(keywords::group_from_id(g));
    return p;
}

void save_profiles(const std::filesystem::path& path, const std::vector<ClusterProfile>& profiles) {
    Json arr = Json::array();
    for (const auto& p : profiles) arr.push_back(to_json(p));
    write_file_atomic(path, arr.dump(2) + "\n");
}

std::vector<ClusterProfile> load_profiles(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw UpstreamMissingError(path.string(), "cluster");
    const auto j = read_json_file(path);
    if (!j.is_array()) throw ValidationError(path.string() + ": expected a JSON array of clusters");
    std::vector<ClusterProfile> out;
    for (const auto& item : j) out.push_back(cluster_profile_from_json(item));
    return out;
}

std::map<std::string, int> load_external_labels(const std::filesystem::path& path) {
    std::map<std::string, int> labels;
    const auto issues = read_jsonl(path, [&](std::size_t, const Json& j) {
        const auto id = j.at("article_id").get<std::string>();
        const int c = j.at("cluster_id").get<int>();
        if (c < 0) throw ValidationError("external label for '" + id + "' is negative");
        if (!labels.emplace(id, c).second) throw ValidationError("duplicate external label for '" + id + "'");
    });
    if (!issues.empty())
        throw ValidationError(path.string() + ":" + std::to_string(issues.front().line) + ": " + issues.front().message);
    return labels;
}

std::vector<ClusterProfile> profiles_from_labels(const std::map<std::string, int>& labels) {
    std::map<int, ClusterProfile> by_id;
    for (const auto& [article, id] : labels) {
        if (id == kNoise) continue;
        auto& p = by_id[id];
        p.cluster_id = id;
        p.article_ids.push_back(article);
    }
    std::vector<ClusterProfile> out;
    for (auto& [id, p] : by_id) out.push_back(std::move(p));
    return out;
}

std::string summarize_cluster(const ClusterProfile& profile, const corpus::ArticleStore& store,
                              providers::GenerationProvider& generator, const SummaryParams& params,
                              const prompts::PromptTemplate& tmpl) {
    if (profile.article_ids.empty()) throw ValidationError("cannot summarize an empty cluster");
    if (params.chunk_tokens < 128) throw ValidationError("chunk_tokens must be >= 128");

    std::string text;
    for (const auto& id : profile.article_ids) {
        const auto* a = store.find(id);
        if (!a) throw ValidationError("cluster " + std::to_string(profile.cluster_id) + " lists unknown article '" + id + "'");
        if (!text.empty()) text += "\n\n";
        text += a->title + "\n" + a->body;
    }
    const auto tokens = corpus::tokenize_with_offsets(text);
    std::string summary;
    for (std::size_t start = 0; start < tokens.size(); start += params.chunk_tokens) {
        const std::size_t end = std::min(tokens.size(), start + params.chunk_tokens);
        const auto passage = prompts::flatten(std::string_view(text).substr(
            tokens[start].begin, tokens[end - 1].end - tokens[start].begin));
        const auto prompt = tmpl.fill({{"summary", summary}, {"passage", passage}});
        summary = prompts::flatten(generator.generate({prompt, params.chunk_tokens, 0.0}));
        const auto st = corpus::tokenize_with_offsets(summary);
        if (st.size() > params.chunk_tokens) summary = summary.substr(0, st[params.chunk_tokens - 1].end);
    }
    return summary;
}

std::optional<Allocation> parse_allocation(std::string_view reply) {
    Allocation out;
    auto text = trim(reply);
    if (text.empty()) return out;
    // Tolerate a trailing period and newline-separated lists.
    for (char& c : text)
        if (c == '\n' || c == ';') c = ',';
    while (!text.empty() && text.back() == '.') text.pop_back();
    std::set<keywords::SocialGroup> seen;
    std::size_t recognised = 0;
    const auto parts = split(text, ',');
    for (const auto& raw : parts) {
        auto label = trim(raw);
        if (label.empty()) continue;
        if (label.size() > 60) return std::nullopt;
        if (const auto g = keywords::parse_group(label)) {
            ++recognised;
            if (seen.insert(*g).second) out.groups.push_back(*g);
        } else if (utf8::lower(label) == "none") {
            ++recognised;
        } else {
            out.warnings.push_back("dropped unknown group label '" + label + "'");
        }
    }
    if (recognised == 0 && parts.size() == 1 && text.find(' ') != std::string::npos && text.size() > 40)
        return std::nullopt;
    return out;
}

Allocation allocate_groups(std::string_view summary, providers::GenerationProvider& generator,
                           const prompts::PromptTemplate& tmpl) {
    if (trim(summary).empty()) throw ValidationError("cannot allocate groups for an empty summary");
    std::vector<std::string> labels;
    for (auto g : keywords::kAllGroups) labels.emplace_back(keywords::group_label(g));
    const auto prompt = tmpl.fill({{"groups", join(labels, ", ")}, {"summary", prompts::flatten(summary)}});
    std::string reply;
    for (int attempt = 0; attempt < 2; ++attempt) {
        reply = generator.generate({prompt, 64, 0.0});
        if (auto parsed = parse_allocation(reply)) return *parsed;
    }
    throw ValidationError("unparseable group allocation reply: '" + reply + "'");
}

}  // namespace libra::clustering
