#include "libra/providers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <thread>

#include "httplib.h"
#include "libra/errors.hpp"

namespace libra::providers {

std::string_view to_string(LogprobMode mode) { return mode == LogprobMode::mlm ? "mlm" : "clm"; }

LogprobMode logprob_mode_from_string(std::string_view name) {
    if (name == "mlm") return LogprobMode::mlm;
    if (name == "clm") return LogprobMode::clm;
    throw ValidationError("unknown scoring mode '" + std::string(name) + "' (expected mlm|clm)");
}

std::size_t LogprobRequest::expected_length() const {
    return mode == LogprobMode::mlm ? mask_indices.size() : tokens.size() - start_index;
}

void LogprobRequest::validate() const {
    if (tokens.empty()) throw ValidationError("logprob request has no tokens");
    if (mode == LogprobMode::mlm) {
        if (mask_indices.empty()) throw ValidationError("mlm request has no mask indices");
        for (std::size_t i : mask_indices)
            if (i >= tokens.size()) throw ValidationError("mask index " + std::to_string(i) + " out of range");
    } else if (start_index >= tokens.size()) {
        throw ValidationError("clm start_index " + std::to_string(start_index) + " out of range");
    }
}

Json LogprobRequest::to_json() const {
    Json j{{"mode", providers::to_string(mode)}, {"tokens", tokens}};
    if (mode == LogprobMode::mlm)
        j["mask_indices"] = mask_indices;
    else
        j["start_index"] = start_index;
    return j;
}

LogprobRequest LogprobRequest::from_json(const Json& j) {
    LogprobRequest r;
    r.mode = logprob_mode_from_string(j.at("mode").get<std::string>());
    r.tokens = j.at("tokens").get<std::vector<std::string>>();
    if (r.mode == LogprobMode::mlm)
        r.mask_indices = j.at("mask_indices").get<std::vector<std::size_t>>();
    else
        r.start_index = j.value("start_index", std::size_t{0});
    r.validate();
    return r;
}

void validate_response(const LogprobRequest& request, const LogprobResponse& response) {
    if (response.logprobs.size() != request.expected_length())
        throw ProviderError("logprob response has " + std::to_string(response.logprobs.size()) + " values, expected " +
                            std::to_string(request.expected_length()));
    for (std::size_t i = 0; i < response.logprobs.size(); ++i) {
        const std::size_t position = request.mode == LogprobMode::mlm ? request.mask_indices[i] : request.start_index + i;
        if (!std::isfinite(response.logprobs[i]))
            throw ProviderError("non-finite logprob at token position " + std::to_string(position));
    }
}

// ---------------------------------------------------------------------------
// HTTP transport

void ProviderEndpoint::validate() const {
    if (base_url.rfind("http://", 0) != 0 && base_url.rfind("https://", 0) != 0)
        throw ValidationError("provider base_url must start with http:// or https://: '" + base_url + "'");
    if (max_in_flight < 1) throw ValidationError("provider max_in_flight must be >= 1");
}

HttpTransport::HttpTransport(ProviderEndpoint endpoint)
    : endpoint_(std::move(endpoint)),
      in_flight_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, endpoint_.max_in_flight))) {
    endpoint_.validate();
    const auto scheme_end = endpoint_.base_url.find("://") + 3;
    const auto path_start = endpoint_.base_url.find('/', scheme_end);
    scheme_host_port_ = endpoint_.base_url.substr(0, path_start);
    if (path_start != std::string::npos) {
        path_prefix_ = endpoint_.base_url.substr(path_start);
        while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
    }
}

Json HttpTransport::post(const std::string& path, const Json& body) {
    const auto payload = body.dump();
    std::string last_error;
    for (std::size_t attempt = 0; attempt <= endpoint_.retries; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(endpoint_.backoff * (1LL << std::min<std::size_t>(attempt - 1, 10)));
        in_flight_.acquire();
        httplib::Result res;
        {
            struct Release {
                std::counting_semaphore<>& s;
                ~Release() { s.release(); }
            } release{in_flight_};
            httplib::Client client(scheme_host_port_);
            const auto secs = std::chrono::duration_cast<std::chrono::seconds>(endpoint_.timeout);
            const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(endpoint_.timeout - secs);
            client.set_connection_timeout(secs.count(), usecs.count());
            client.set_read_timeout(secs.count(), usecs.count());
            client.set_write_timeout(secs.count(), usecs.count());
            httplib::Headers headers;
            if (!endpoint_.bearer_token.empty()) headers.emplace("Authorization", "Bearer " + endpoint_.bearer_token);
            res = client.Post(path_prefix_ + path, headers, payload, "application/json");
        }
        if (!res) {
            last_error = "connection error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw ProviderError(endpoint_.base_url + path + " returned HTTP " + std::to_string(res->status) + ": " +
                                res->body.substr(0, 200));
        try {
            return Json::parse(res->body);
        } catch (const Json::parse_error& e) {
            throw ProviderError(endpoint_.base_url + path + " returned invalid JSON: " + e.what());
        }
    }
    throw ProviderError(endpoint_.base_url + path + " failed after " + std::to_string(endpoint_.retries + 1) +
                        " attempts: " + last_error);
}

// ---------------------------------------------------------------------------
// Offline cache

std::string request_sha256(const std::string& path, const Json& body) { return sha256_hex(path + "\n" + body.dump()); }

OfflineTransport::OfflineTransport(const std::filesystem::path& cache_file) {
    if (!std::filesystem::exists(cache_file)) throw ValidationError("offline cache not found: " + cache_file.string());
    const auto issues = read_jsonl(cache_file, [&](std::size_t, const Json& j) {
        responses_[j.at("request_sha256").get<std::string>()] = j.at("response");
    });
    if (!issues.empty())
        throw ValidationError(cache_file.string() + ":" + std::to_string(issues.front().line) + ": " +
                              issues.front().message);
}

Json OfflineTransport::post(const std::string& path, const Json& body) {
    const auto key = request_sha256(path, body);
    const auto it = responses_.find(key);
    if (it == responses_.end()) throw ProviderError("offline cache miss for " + path + " request " + key);
    return it->second;
}

RecordingTransport::RecordingTransport(std::shared_ptr<Transport> inner, std::filesystem::path cache_file)
    : inner_(std::move(inner)), cache_file_(std::move(cache_file)) {}

Json RecordingTransport::post(const std::string& path, const Json& body) {
    auto response = inner_->post(path, body);
    const Json record{{"request_sha256", request_sha256(path, body)}, {"response", response}};
    std::lock_guard lock(mutex_);
    if (cache_file_.has_parent_path()) std::filesystem::create_directories(cache_file_.parent_path());
    std::ofstream out(cache_file_, std::ios::app | std::ios::binary);
    out << record.dump() << '\n';
    return response;
}

// ---------------------------------------------------------------------------
// Clients

LogprobResponse fetch_logprobs(Transport& transport, const std::string& model_id, const LogprobRequest& request) {
    request.validate();
    auto body = request.to_json();
    body["model"] = model_id;
    const auto reply = transport.post("/v1/logprobs", body);
    LogprobResponse response;
    try {
        response.logprobs = reply.at("logprobs").get<std::vector<double>>();
    } catch (const Json::exception& e) {
        throw ProviderError(std::string("malformed logprobs response: ") + e.what());
    }
    validate_response(request, response);
    return response;
}

std::vector<Vector> fetch_embeddings(Transport& transport, const std::string& model_id,
                                     std::span<const std::string> texts) {
    if (texts.empty()) throw ValidationError("embedding request has no texts");
    const Json body{{"model", model_id}, {"texts", std::vector<std::string>(texts.begin(), texts.end())}};
    const auto reply = transport.post("/v1/embed", body);
    std::vector<Vector> vectors;
    try {
        vectors = reply.at("vectors").get<std::vector<Vector>>();
    } catch (const Json::exception& e) {
        throw ProviderError(std::string("malformed embedding response: ") + e.what());
    }
    if (vectors.size() != texts.size())
        throw ProviderError("embedding response has " + std::to_string(vectors.size()) + " vectors for " +
                            std::to_string(texts.size()) + " texts");
    for (const auto& v : vectors) {
        if (v.size() != vectors.front().size()) throw ProviderError("embedding response has mixed dimensions");
        for (double x : v)
            if (!std::isfinite(x)) throw ProviderError("embedding response has a non-finite component");
    }
    return vectors;
}

std::string fetch_generation(Transport& transport, const std::string& model_id, const GenerationRequest& request) {
    if (request.prompt.empty()) throw ValidationError("generation request has an empty prompt");
    const Json body{{"model", model_id},
                    {"prompt", request.prompt},
                    {"max_tokens", request.max_tokens},
                    {"temperature", request.temperature}};
    const auto reply = transport.post("/v1/generate", body);
    try {
        return reply.at("text").get<std::string>();
    } catch (const Json::exception& e) {
        throw ProviderError(std::string("malformed generation response: ") + e.what());
    }
}

LogprobClient::LogprobClient(std::shared_ptr<Transport> transport, std::string model_id)
    : transport_(std::move(transport)), model_id_(std::move(model_id)) {}

LogprobResponse LogprobClient::logprobs(const LogprobRequest& request) {
    return fetch_logprobs(*transport_, model_id_, request);
}

EmbeddingClient::EmbeddingClient(std::shared_ptr<Transport> transport, std::string model_id)
    : transport_(std::move(transport)), model_id_(std::move(model_id)) {}

std::vector<Vector> EmbeddingClient::embed(std::span<const std::string> texts) {
    return fetch_embeddings(*transport_, model_id_, texts);
}

GenerationClient::GenerationClient(std::shared_ptr<Transport> transport, std::string model_id)
    : transport_(std::move(transport)), model_id_(std::move(model_id)) {}

std::string GenerationClient::generate(const GenerationRequest& request) {
    return fetch_generation(*transport_, model_id_, request);
}

std::vector<Vector> embed_batched(EmbeddingProvider& provider, const std::vector<std::string>& texts,
                                  std::size_t batch_size, std::size_t max_in_flight) {
    std::vector<Vector> out(texts.size());
    if (texts.empty()) return out;
    batch_size = std::max<std::size_t>(1, batch_size);
    const std::size_t batches = (texts.size() + batch_size - 1) / batch_size;
    parallel_for(batches, max_in_flight, [&](std::size_t b) {
        const std::size_t begin = b * batch_size;
        const std::size_t end = std::min(texts.size(), begin + batch_size);
        const std::span<const std::string> batch(texts.data() + begin, end - begin);
        std::vector<Vector> vecs;
        try {
            vecs = provider.embed(batch);
        } catch (const Error& e) {
            throw ProviderError(std::string(e.what()) + " (embedding batch of " + std::to_string(batch.size()) +
                                " starting at '" + batch.front() + "')");
        }
        if (vecs.size() != batch.size())
            throw ProviderError("embedding provider returned " + std::to_string(vecs.size()) + " vectors for a batch of " +
                                std::to_string(batch.size()) + " starting at '" + batch.front() + "'");
        for (std::size_t i = 0; i < vecs.size(); ++i) out[begin + i] = std::move(vecs[i]);
    });
    const auto dim = out.front().size();
    for (const auto& v : out)
        if (v.size() != dim) throw ProviderError("embedding provider returned mixed dimensions");
    return out;
}

double cosine(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw ValidationError("cosine of vectors with different dimensions");
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0 || nb == 0) return 0.0;
    // sqrt(na * nb) is exact when a == b, so identical vectors give exactly 1.
    return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

}  // namespace libra::providers
