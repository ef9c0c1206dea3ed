#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "libra/providers.hpp"
#include "libra/triplets.hpp"

namespace libra::scoring {

using providers::LogprobMode;

/// Pseudo-log-likelihood: mean of log P(t_i | rest) over every position,
/// each masked on its own. Sent as one request carrying all mask indices.
double score_mlm(const std::vector<std::string>& tokens, providers::LogprobProvider& provider);

/// Mean of log P(t_i | t_<i) for i >= u_left_len.
double score_clm(const std::vector<std::string>& tokens, std::size_t u_left_len, providers::LogprobProvider& provider);

struct TripletScore {
    std::string triplet_id;
    double l_stereo = 0;
    double l_anti = 0;
    double l_unrelated = 0;
    LogprobMode mode = LogprobMode::mlm;
    bool valid = false;
    std::string error;

    bool operator==(const TripletScore&) const = default;
};

Json to_json(const TripletScore& s);
TripletScore triplet_score_from_json(const Json& j);

/// Provider failures yield valid=false with the message in `error`.
TripletScore score_triplet(const triplets::Triplet& t, providers::LogprobProvider& provider, LogprobMode mode);

struct ScoreParams {
    LogprobMode mode = LogprobMode::mlm;
    bool include_pending = false;
    std::size_t max_in_flight = 4;
};

struct ScoreRun {
    std::vector<TripletScore> scores;  // eligible triplets, dataset order
    std::size_t reused = 0;
    std::size_t failed = 0;
    std::size_t skipped_rejected = 0;
    std::size_t skipped_invalid_kb = 0;
    std::size_t skipped_pending = 0;
};

/// Scores every eligible triplet. Valid scores in `previous` with a matching
/// mode are reused; invalid ones are retried. `on_scored` runs (serialized)
/// after each fresh score, for incremental checkpoints.
ScoreRun score_dataset(const triplets::Dataset& dataset, providers::LogprobProvider& provider, const ScoreParams& params,
                       const std::vector<TripletScore>& previous = {},
                       const std::function<void(const TripletScore&)>& on_scored = {});

struct PreferenceCounts {
    std::size_t n_stereo_preferred = 0;
    std::size_t n_anti_preferred = 0;
    std::size_t n_meaningful_preferred = 0;
    std::size_t n_total = 0;
};

struct Preferences {
    PreferenceCounts counts;
    double ss = 0;
    double lms = 0;
};

/// Ties between stereo and anti count as anti. Meaningful means
/// max(l_stereo, l_anti) > l_unrelated. Invalid scores are ignored.
Preferences compute_preferences(const std::vector<TripletScore>& scores);

std::string serialize_scores(const std::vector<TripletScore>& scores);
/// Later records for an id replace earlier ones. Missing file gives an empty list.
std::vector<TripletScore> read_scores(const std::filesystem::path& path, bool required = false);

}  // namespace libra::scoring
