#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "libra/config.hpp"
#include "libra/keywords.hpp"
#include "libra/providers.hpp"
#include "libra/triplets.hpp"

namespace libra::pipeline {

enum ExitCode : int { kOk = 0, kValidation = 1, kUpstreamMissing = 2, kProviderFailure = 3 };

/// Maps an exception to the documented exit code.
int exit_code_for(const std::exception& e);

/// Raised by run-all when unreviewed triplets would be scored.
class PendingReviewGate : public ValidationError {
public:
    explicit PendingReviewGate(std::size_t pending);
    std::size_t pending() const noexcept { return pending_; }

private:
    std::size_t pending_;
};

struct Paths {
    std::filesystem::path out;
    std::filesystem::path corpus_dir;
    std::filesystem::path articles;
    std::filesystem::path keywords;
    std::filesystem::path keywords_report;
    std::filesystem::path embeddings;
    std::filesystem::path clusters;
    std::filesystem::path cluster_report;
    std::filesystem::path candidates;
    std::filesystem::path triplets;
    std::filesystem::path build_report;
    std::filesystem::path audit;
    std::filesystem::path kb_report;
    std::filesystem::path scores;
    std::filesystem::path scores_partial;
    std::filesystem::path report_json;
    std::filesystem::path report_md;
    std::filesystem::path density;
    std::filesystem::path manifest;
};
Paths paths_for(const config::RunConfig& config);

struct Options {
    bool force = false;          // ignore the manifest and re-run
    bool allow_pending = false;  // run-all: score pending triplets instead of stopping
    std::optional<bool> include_pending;
    // metrics overrides
    std::optional<std::filesystem::path> scores_file;
    std::optional<std::filesystem::path> triplets_file;
    std::optional<double> bbs;
    std::optional<std::filesystem::path> report_out;
    std::ostream* log = nullptr;
};

struct StageResult {
    std::string command;
    bool skipped = false;
    Json counts = Json::object();
    std::vector<std::string> warnings;
};

StageResult run_ingest(const config::RunConfig& config, const Options& options);
StageResult run_keywords(const config::RunConfig& config, const Options& options);
StageResult run_cluster(const config::RunConfig& config, const Options& options);
StageResult run_search(const config::RunConfig& config, const Options& options);
StageResult run_build_triplets(const config::RunConfig& config, const Options& options);
StageResult run_kb_probe(const config::RunConfig& config, const Options& options);
StageResult run_score(const config::RunConfig& config, const Options& options);
StageResult run_metrics(const config::RunConfig& config, const Options& options);
/// Writes report.md from report.json and returns the rendered text in counts["text"].
StageResult run_report(const config::RunConfig& config, const Options& options, std::string_view format);
std::vector<StageResult> run_all(const config::RunConfig& config, const Options& options);

// ---------------------------------------------------------------------------
// Provider construction from config sections ("providers.<role>").

struct ProviderContext {
    const keywords::KeywordCatalog* catalog = nullptr;
    const triplets::Dataset* dataset = nullptr;  // theoretical LMs index the eligible triplets
    bool include_pending = false;
    std::map<std::string, std::string> glossary;
};

std::shared_ptr<providers::LogprobProvider> make_logprob_provider(const config::RunConfig& config,
                                                                  const ProviderContext& context);
std::shared_ptr<providers::EmbeddingProvider> make_embedding_provider(const config::RunConfig& config);
std::shared_ptr<providers::GenerationProvider> make_generation_provider(const config::RunConfig& config,
                                                                        std::string_view role,
                                                                        const ProviderContext& context);
/// Configured model id, else the stub name.
std::string model_name(const config::RunConfig& config, std::string_view role);

std::vector<triplets::CandidateSentence> read_candidates(const std::filesystem::path& path);
void write_candidates(const std::filesystem::path& path, const std::vector<triplets::CandidateSentence>& candidates);

}  // namespace libra::pipeline
