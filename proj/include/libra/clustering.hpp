#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "libra/corpus.hpp"
#include "libra/keywords.hpp"
#include "libra/prompts.hpp"
#include "libra/providers.hpp"

namespace libra::clustering {

struct ArticleEmbedding {
    std::string article_id;
    std::vector<double> vector;

    bool operator==(const ArticleEmbedding&) const = default;
};

void save_embeddings(const std::filesystem::path& path, const std::vector<ArticleEmbedding>& embeddings);
std::vector<ArticleEmbedding> load_embeddings(const std::filesystem::path& path);

/// Embeds title + body of every article, in store order.
std::vector<ArticleEmbedding> embed_articles(const corpus::ArticleStore& store, providers::EmbeddingProvider& embedder,
                                             std::size_t batch_size = 16, std::size_t max_in_flight = 4);

// ---------------------------------------------------------------------------
// Dimensionality reduction

struct Reduction {
    std::vector<ArticleEmbedding> embeddings;
    std::vector<double> eigenvalues;  // all components, descending
    double retained_variance_ratio = 0.0;
};

/// Principal-component projection onto the top `d` components. Each
/// component's sign is fixed so its largest-magnitude loading is positive.
Reduction reduce_dims(const std::vector<ArticleEmbedding>& embeddings, std::size_t d);

/// Scales each vector to unit length (zero vectors stay zero).
std::vector<ArticleEmbedding> normalize_rows(std::vector<ArticleEmbedding> embeddings);

// ---------------------------------------------------------------------------
// Density clustering

inline constexpr int kNoise = -1;

struct ClusterAssignment {
    std::map<std::string, int> labels;  // article id -> cluster id or kNoise
    std::map<int, std::vector<double>> centroids;

    std::size_t noise_count() const;
    std::vector<std::string> members(int cluster_id) const;
    bool operator==(const ClusterAssignment&) const = default;
};

/// DBSCAN over Euclidean distance. A point is core when at least `min_pts`
/// points (itself included) lie within `eps`. Core points reachable through
/// core neighbours share a cluster; a border point joins the cluster of its
/// nearest core neighbour (ties: smaller article id). Cluster ids are
/// numbered by each cluster's smallest article id, so the result does not
/// depend on input order.
ClusterAssignment cluster_articles(const std::vector<ArticleEmbedding>& embeddings, double eps, std::size_t min_pts);

struct NoiseAssignment {
    ClusterAssignment assignment;
    std::size_t rounds = 0;
};

/// Moves every noise point to the nearest centroid (ties: lower cluster id),
/// recomputes centroids and repeats until the reassigned labels stop
/// changing, for at most `max_rounds` rounds.
NoiseAssignment assign_noise(const ClusterAssignment& assignment, const std::vector<ArticleEmbedding>& embeddings,
                             std::size_t max_rounds = 10);

std::map<int, std::vector<double>> compute_centroids(const std::map<std::string, int>& labels,
                                                     const std::vector<ArticleEmbedding>& embeddings);

// ---------------------------------------------------------------------------
// Profiles

struct ClusterProfile {
    int cluster_id = 0;
    std::string summary;
    std::vector<keywords::SocialGroup> groups;
    std::vector<std::string> article_ids;

    bool operator==(const ClusterProfile&) const = default;
};

Json to_json(const ClusterProfile& profile);
ClusterProfile cluster_profile_from_json(const Json& j);
void save_profiles(const std::filesystem::path& path, const std::vector<ClusterProfile>& profiles);
std::vector<ClusterProfile> load_profiles(const std::filesystem::path& path);

/// External labels.jsonl ({"article_id", "cluster_id"}), replacing in-repo clustering.
std::map<std::string, int> load_external_labels(const std::filesystem::path& path);

std::vector<ClusterProfile> profiles_from_labels(const std::map<std::string, int>& labels);

struct SummaryParams {
    std::size_t chunk_tokens = 512;
};

/// Incremental summary: folds the cluster's article text chunk by chunk
/// through the generator, feeding back the running summary each step. The
/// result is cut to at most `chunk_tokens` tokens.
std::string summarize_cluster(const ClusterProfile& profile, const corpus::ArticleStore& store,
                              providers::GenerationProvider& generator, const SummaryParams& params,
                              const prompts::PromptTemplate& tmpl = prompts::builtin(prompts::Task::summarize));

struct Allocation {
    std::vector<keywords::SocialGroup> groups;
    std::vector<std::string> warnings;
};

/// Parses a comma-separated group list. Unknown labels are dropped with a
/// warning. Returns nullopt when the reply does not look like a list at all.
std::optional<Allocation> parse_allocation(std::string_view reply);

/// Asks the generator which taxonomy groups the summary concerns. One retry
/// on an unparseable reply, then ValidationError carrying the raw reply.
Allocation allocate_groups(std::string_view summary, providers::GenerationProvider& generator,
                           const prompts::PromptTemplate& tmpl = prompts::builtin(prompts::Task::allocate));

}  // namespace libra::clustering
