#include "libra/scoring.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numeric>

#include "libra/errors.hpp"

namespace libra::scoring {

namespace {

double mean(const std::vector<double>& values) {
    // Plain left-to-right sum so independent recomputation matches bit for bit.
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
}

providers::LogprobResponse fetch(providers::LogprobProvider& provider, const providers::LogprobRequest& request) {
    auto response = provider.logprobs(request);
    providers::validate_response(request, response);
    return response;
}

Json number_or_null(double v, bool valid) { return valid ? Json(v) : Json(nullptr); }

}  // namespace

double score_mlm(const std::vector<std::string>& tokens, providers::LogprobProvider& provider) {
    if (tokens.empty()) throw ValidationError("cannot score an empty sentence");
    providers::LogprobRequest r;
    r.mode = LogprobMode::mlm;
    r.tokens = tokens;
    r.mask_indices.resize(tokens.size());
    std::iota(r.mask_indices.begin(), r.mask_indices.end(), std::size_t{0});
    return mean(fetch(provider, r).logprobs);
}

double score_clm(const std::vector<std::string>& tokens, std::size_t u_left_len, providers::LogprobProvider& provider) {
    if (tokens.empty()) throw ValidationError("cannot score an empty sentence");
    if (u_left_len >= tokens.size())
        throw ValidationError("left context length " + std::to_string(u_left_len) + " leaves nothing to score in a " +
                              std::to_string(tokens.size()) + "-token sentence");
    providers::LogprobRequest r;
    r.mode = LogprobMode::clm;
    r.tokens = tokens;
    r.start_index = u_left_len;
    return mean(fetch(provider, r).logprobs);
}

Json to_json(const TripletScore& s) {
    Json j{{"triplet_id", s.triplet_id},
           {"l_stereo", number_or_null(s.l_stereo, s.valid)},
           {"l_anti", number_or_null(s.l_anti, s.valid)},
           {"l_unrelated", number_or_null(s.l_unrelated, s.valid)},
           {"mode", providers::to_string(s.mode)},
           {"valid", s.valid}};
    if (!s.error.empty()) j["error"] = s.error;
    return j;
}

TripletScore triplet_score_from_json(const Json& j) {
    TripletScore s;
    s.triplet_id = j.at("triplet_id").get<std::string>();
    s.mode = providers::logprob_mode_from_string(j.at("mode").get<std::string>());
    s.valid = j.at("valid").get<bool>();
    s.error = j.value("error", std::string());
    if (s.valid) {
        s.l_stereo = j.at("l_stereo").get<double>();
        s.l_anti = j.at("l_anti").get<double>();
        s.l_unrelated = j.at("l_unrelated").get<double>();
        if (!std::isfinite(s.l_stereo) || !std::isfinite(s.l_anti) || !std::isfinite(s.l_unrelated))
            throw ValidationError("score for " + s.triplet_id + " is not finite");
    }
    return s;
}

TripletScore score_triplet(const triplets::Triplet& t, providers::LogprobProvider& provider, LogprobMode mode) {
    TripletScore s;
    s.triplet_id = t.id;
    s.mode = mode;
    auto one = [&](const std::vector<std::string>& tokens) {
        return mode == LogprobMode::mlm ? score_mlm(tokens, provider)
                                        : score_clm(tokens, t.split.u_left.size(), provider);
    };
    try {
        s.l_stereo = one(t.stereo_tokens());
        s.l_anti = one(t.anti_tokens());
        s.l_unrelated = one(t.unrelated_tokens());
        s.valid = true;
    } catch (const ProviderError& e) {
        s = TripletScore{t.id, 0, 0, 0, mode, false, e.what()};
    }
    return s;
}

ScoreRun score_dataset(const triplets::Dataset& dataset, providers::LogprobProvider& provider, const ScoreParams& params,
                       const std::vector<TripletScore>& previous,
                       const std::function<void(const TripletScore&)>& on_scored) {
    std::map<std::string, const TripletScore*, std::less<>> known;
    for (const auto& s : previous) {
        if (!s.valid) continue;
        if (s.mode != params.mode)
            throw ValidationError("existing scores use mode " + std::string(providers::to_string(s.mode)) +
                                  "; remove them or score with that mode");
        known[s.triplet_id] = &s;
    }

    ScoreRun run;
    std::vector<const triplets::Triplet*> todo;
    for (const auto& t : dataset.triplets()) {
        if (!triplets::eligible(t, params.include_pending)) {
            if (t.status == triplets::Status::rejected) ++run.skipped_rejected;
            else if (!t.kb_valid) ++run.skipped_invalid_kb;
            else ++run.skipped_pending;
            continue;
        }
        todo.push_back(&t);
    }
    run.scores.resize(todo.size());
    std::vector<std::size_t> fresh;
    for (std::size_t i = 0; i < todo.size(); ++i) {
        if (const auto it = known.find(todo[i]->id); it != known.end()) {
            run.scores[i] = *it->second;
            ++run.reused;
        } else {
            fresh.push_back(i);
        }
    }
    std::mutex mutex;
    parallel_for(fresh.size(), params.max_in_flight, [&](std::size_t k) {
        const auto i = fresh[k];
        auto s = score_triplet(*todo[i], provider, params.mode);
        std::lock_guard lock(mutex);
        if (on_scored) on_scored(s);
        run.scores[i] = std::move(s);
    });
    for (const auto& s : run.scores)
        if (!s.valid) ++run.failed;
    return run;
}

Preferences compute_preferences(const std::vector<TripletScore>& scores) {
    Preferences p;
    for (const auto& s : scores) {
        if (!s.valid) continue;
        ++p.counts.n_total;
        if (s.l_stereo > s.l_anti) ++p.counts.n_stereo_preferred;
        else ++p.counts.n_anti_preferred;
        if (std::max(s.l_stereo, s.l_anti) > s.l_unrelated) ++p.counts.n_meaningful_preferred;
    }
    if (p.counts.n_total == 0) throw ValidationError("no valid scores to aggregate");
    const auto n = static_cast<double>(p.counts.n_total);
    p.ss = static_cast<double>(p.counts.n_stereo_preferred) / n;
    p.lms = static_cast<double>(p.counts.n_meaningful_preferred) / n;
    return p;
}

std::string serialize_scores(const std::vector<TripletScore>& scores) {
    std::string out;
    for (const auto& s : scores) {
        out += to_json(s).dump();
        out += '\n';
    }
    return out;
}

std::vector<TripletScore> read_scores(const std::filesystem::path& path, bool required) {
    if (!std::filesystem::exists(path)) {
        if (required) throw UpstreamMissingError(path.string(), "score");
        return {};
    }
    std::vector<TripletScore> out;
    std::map<std::string, std::size_t> index;
    const auto issues = read_jsonl(path, [&](std::size_t, const Json& j) {
        auto s = triplet_score_from_json(j);
        if (const auto it = index.find(s.triplet_id); it != index.end()) {
            out[it->second] = std::move(s);
        } else {
            index.emplace(s.triplet_id, out.size());
            out.push_back(std::move(s));
        }
    });
    if (!issues.empty())
        throw ValidationError(path.string() + ":" + std::to_string(issues.front().line) + ": " + issues.front().message);
    return out;
}

}  // namespace libra::scoring
