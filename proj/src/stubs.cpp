#include "libra/stubs.hpp"

#include <cmath>
#include <set>

#include "libra/corpus.hpp"
#include "libra/errors.hpp"
#include "libra/prompts.hpp"

namespace libra::stubs {

namespace {

double map_to_logprob(std::uint64_t h) { return std::log(0.01 + 0.98 * unit_interval(h)); }

std::string sequence_key(const std::vector<std::string>& tokens) { return join(tokens, "\x1f"); }

std::string define_reply(const std::map<std::string, std::string>& glossary, std::string_view prompt) {
    const auto word = prompts::field(prompt, "Word:");
    if (!word) return "unknown";
    const auto it = glossary.find(utf8::lower(*word));
    return it == glossary.end() ? "unknown" : it->second;
}

std::string judge_reply(std::string_view prompt) {
    const auto a = prompts::field(prompt, "Definition A:");
    const auto b = prompts::field(prompt, "Definition B:");
    if (!a || !b) return "NO";
    return same_definition(*a, *b) ? "YES" : "NO";
}

}  // namespace

bool same_definition(std::string_view a, std::string_view b) {
    return utf8::lower(prompts::flatten(a)) == utf8::lower(prompts::flatten(b));
}

double UnigramScorer::token_logprob(std::string_view token) const {
    return map_to_logprob(splitmix64(seed_ ^ fnv1a64(token)));
}

providers::LogprobResponse UnigramScorer::logprobs(const providers::LogprobRequest& request) {
    request.validate();
    providers::LogprobResponse r;
    if (request.mode == providers::LogprobMode::mlm) {
        for (std::size_t i : request.mask_indices) r.logprobs.push_back(token_logprob(request.tokens[i]));
    } else {
        for (std::size_t i = request.start_index; i < request.tokens.size(); ++i)
            r.logprobs.push_back(token_logprob(request.tokens[i]));
    }
    return r;
}

providers::LogprobResponse RandomLM::logprobs(const providers::LogprobRequest& request) {
    request.validate();
    const std::string base = std::string(providers::to_string(request.mode)) + "\x1e" + sequence_key(request.tokens);
    const std::uint64_t h = fnv1a64(base);
    auto draw = [&](std::size_t position) { return map_to_logprob(splitmix64(seed_ ^ splitmix64(h + position))); };
    providers::LogprobResponse r;
    if (request.mode == providers::LogprobMode::mlm) {
        for (std::size_t i : request.mask_indices) r.logprobs.push_back(draw(i));
    } else {
        for (std::size_t i = request.start_index; i < request.tokens.size(); ++i) r.logprobs.push_back(draw(i));
    }
    return r;
}

std::string RandomLM::generate(const providers::GenerationRequest& request) {
    const auto h = splitmix64(seed_ ^ fnv1a64(request.prompt));
    return "something random #" + std::to_string(h % 100000);
}

RoleIndex::RoleIndex(const std::vector<SentenceTriple>& triples) {
    for (std::size_t i = 0; i < triples.size(); ++i) {
        index_.emplace(sequence_key(triples[i].stereo), Hit{Role::stereo, i});
        index_.emplace(sequence_key(triples[i].anti), Hit{Role::anti, i});
        index_.emplace(sequence_key(triples[i].unrelated), Hit{Role::unrelated, i});
    }
}

std::optional<RoleIndex::Hit> RoleIndex::find(const std::vector<std::string>& tokens) const {
    const auto it = index_.find(sequence_key(tokens));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

TheoreticalLM::TheoreticalLM(TheoreticalKind kind, const std::vector<SentenceTriple>& dataset,
                             std::map<std::string, std::string> glossary)
    : kind_(kind), roles_(dataset) {
    for (auto& [w, d] : glossary) glossary_[utf8::lower(w)] = d;
}

double TheoreticalLM::sentence_logprob(const std::vector<std::string>& tokens) const {
    const auto hit = roles_.find(tokens);
    if (!hit) return std::log(0.5) - 2.0;
    if (kind_ == TheoreticalKind::stereotyped) {
        switch (hit->role) {
            case Role::stereo: return std::log(0.9);
            case Role::anti: return std::log(0.1);
            case Role::unrelated: return std::log(0.01);
        }
    }
    const double sign = (hit->ordinal % 2 == 0) ? 1.0 : -1.0;
    switch (hit->role) {
        case Role::stereo: return std::log(0.5) + sign * kDelta;
        case Role::anti: return std::log(0.5) - sign * kDelta;
        case Role::unrelated: return std::log(0.5) - 1.0;
    }
    return 0.0;
}

providers::LogprobResponse TheoreticalLM::logprobs(const providers::LogprobRequest& request) {
    request.validate();
    const double lp = sentence_logprob(request.tokens);
    return providers::LogprobResponse{std::vector<double>(request.expected_length(), lp)};
}

std::string TheoreticalLM::generate(const providers::GenerationRequest& request) {
    if (prompts::task_of(request.prompt) != prompts::Task::define) return "";
    if (kind_ == TheoreticalKind::ideal) return "I am not sure what this word means.";
    return define_reply(glossary_, request.prompt);
}

std::vector<providers::Vector> HashEmbedder::embed(std::span<const std::string> texts) {
    std::vector<providers::Vector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_one(t));
    return out;
}

providers::Vector HashEmbedder::embed_one(std::string_view text) const {
    providers::Vector v(dim_, 0.0);
    for (const auto& token : corpus::tokenize(text)) {
        if (!corpus::is_word_token(token)) continue;
        const auto h = splitmix64(seed_ ^ fnv1a64(utf8::lower(token)));
        for (std::size_t i = 0; i < dim_; ++i) v[i] += 2.0 * unit_interval(splitmix64(h + i)) - 1.0;
    }
    double norm = 0;
    for (double x : v) norm += x * x;
    if (norm > 0) {
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;
    }
    return v;
}

std::string EchoGenerator::generate(const providers::GenerationRequest& request) {
    std::string last;
    for (const auto& line : split(request.prompt, '\n'))
        if (!trim(line).empty()) last = trim(line);
    const auto tokens = corpus::tokenize_with_offsets(last);
    if (tokens.size() > request.max_tokens) {
        if (request.max_tokens == 0) return {};
        last = last.substr(0, tokens[request.max_tokens - 1].end);
    }
    return last;
}

LexiconGenerator::LexiconGenerator(std::map<std::string, std::vector<std::string>> word_groups,
                                   std::map<std::string, std::string> glossary)
    : word_groups_(std::move(word_groups)) {
    for (auto& [w, d] : glossary) glossary_[utf8::lower(w)] = d;
}

std::string LexiconGenerator::generate(const providers::GenerationRequest& request) {
    const auto task = prompts::task_of(request.prompt);
    if (!task) return "";
    auto spotted = [&](std::string_view text) {
        std::set<std::string> words;
        for (const auto& t : corpus::tokenize(text)) {
            auto w = utf8::lower(t);
            if (word_groups_.contains(w)) words.insert(std::move(w));
        }
        return words;
    };
    switch (*task) {
        case prompts::Task::summarize: {
            const auto words = spotted(prompts::field(request.prompt, "Current summary:").value_or("") + " " +
                                       prompts::field(request.prompt, "New passage:").value_or(""));
            std::vector<std::string> list(words.begin(), words.end());
            if (list.size() > request.max_tokens / 2) list.resize(request.max_tokens / 2);
            return "Topics: " + join(list, ", ");
        }
        case prompts::Task::allocate: {
            std::set<std::string> groups;
            for (const auto& w : spotted(prompts::field(request.prompt, "Summary:").value_or("")))
                for (const auto& g : word_groups_.at(w)) groups.insert(g);
            return join(std::vector<std::string>(groups.begin(), groups.end()), ", ");
        }
        case prompts::Task::define: return define_reply(glossary_, request.prompt);
        case prompts::Task::judge: return judge_reply(request.prompt);
    }
    return "";
}

std::string EqualityJudge::generate(const providers::GenerationRequest& request) { return judge_reply(request.prompt); }

}  // namespace libra::stubs
