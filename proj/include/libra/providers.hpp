#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <vector>

#include "libra/util.hpp"

namespace libra::providers {

// ---------------------------------------------------------------------------
// Wire types

enum class LogprobMode { mlm, clm };

std::string_view to_string(LogprobMode mode);
LogprobMode logprob_mode_from_string(std::string_view name);

/// MLM: each index in `mask_indices` is masked on its own and the provider
/// returns log P(original token | all other tokens) for it, in order.
/// CLM: the provider returns log P(tokens[i] | tokens[0..i)) for every
/// i >= start_index, in order.
struct LogprobRequest {
    LogprobMode mode = LogprobMode::clm;
    std::vector<std::string> tokens;
    std::vector<std::size_t> mask_indices;
    std::size_t start_index = 0;

    std::size_t expected_length() const;
    /// Throws ValidationError when indices are out of range or tokens empty.
    void validate() const;
    Json to_json() const;
    static LogprobRequest from_json(const Json& j);
};

struct LogprobResponse {
    std::vector<double> logprobs;
};

struct GenerationRequest {
    std::string prompt;
    std::size_t max_tokens = 256;
    double temperature = 0.0;
};

using Vector = std::vector<double>;

// ---------------------------------------------------------------------------
// Provider interfaces. Implementations must be safe to call concurrently.

class LogprobProvider {
public:
    virtual ~LogprobProvider() = default;
    virtual LogprobResponse logprobs(const LogprobRequest& request) = 0;
};

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::vector<Vector> embed(std::span<const std::string> texts) = 0;
};

class GenerationProvider {
public:
    virtual ~GenerationProvider() = default;
    virtual std::string generate(const GenerationRequest& request) = 0;
};

/// Checks length and finiteness; throws ProviderError naming the offending position.
void validate_response(const LogprobRequest& request, const LogprobResponse& response);

// ---------------------------------------------------------------------------
// Transport

struct ProviderEndpoint {
    std::string base_url;
    std::string model_id;
    std::chrono::milliseconds timeout{30000};
    std::size_t max_in_flight = 4;
    std::size_t retries = 3;
    std::chrono::milliseconds backoff{200};
    std::string bearer_token;

    void validate() const;
};

/// Moves one JSON request to a backend and returns the JSON reply.
class Transport {
public:
    virtual ~Transport() = default;
    virtual Json post(const std::string& path, const Json& body) = 0;
};

/// HTTP/JSON transport with bounded concurrency and exponential backoff on
/// connection errors, 429 and 5xx replies.
class HttpTransport final : public Transport {
public:
    explicit HttpTransport(ProviderEndpoint endpoint);
    Json post(const std::string& path, const Json& body) override;

    const ProviderEndpoint& endpoint() const noexcept { return endpoint_; }

private:
    ProviderEndpoint endpoint_;
    std::string scheme_host_port_;
    std::string path_prefix_;
    std::counting_semaphore<> in_flight_;
};

/// Content hash of a request, used as the offline cache key.
std::string request_sha256(const std::string& path, const Json& body);

/// Replays responses recorded in responses.jsonl ({"request_sha256", "response"}).
class OfflineTransport final : public Transport {
public:
    explicit OfflineTransport(const std::filesystem::path& cache_file);
    Json post(const std::string& path, const Json& body) override;
    std::size_t size() const noexcept { return responses_.size(); }

private:
    std::map<std::string, Json, std::less<>> responses_;
};

/// Forwards to another transport and appends every exchange to a cache file
/// that OfflineTransport can replay.
class RecordingTransport final : public Transport {
public:
    RecordingTransport(std::shared_ptr<Transport> inner, std::filesystem::path cache_file);
    Json post(const std::string& path, const Json& body) override;

private:
    std::shared_ptr<Transport> inner_;
    std::filesystem::path cache_file_;
    std::mutex mutex_;
};

// ---------------------------------------------------------------------------
// Clients over a transport

class LogprobClient final : public LogprobProvider {
public:
    LogprobClient(std::shared_ptr<Transport> transport, std::string model_id);
    LogprobResponse logprobs(const LogprobRequest& request) override;

private:
    std::shared_ptr<Transport> transport_;
    std::string model_id_;
};

class EmbeddingClient final : public EmbeddingProvider {
public:
    EmbeddingClient(std::shared_ptr<Transport> transport, std::string model_id);
    std::vector<Vector> embed(std::span<const std::string> texts) override;

private:
    std::shared_ptr<Transport> transport_;
    std::string model_id_;
};

class GenerationClient final : public GenerationProvider {
public:
    GenerationClient(std::shared_ptr<Transport> transport, std::string model_id);
    std::string generate(const GenerationRequest& request) override;

private:
    std::shared_ptr<Transport> transport_;
    std::string model_id_;
};

LogprobResponse fetch_logprobs(Transport& transport, const std::string& model_id, const LogprobRequest& request);
std::vector<Vector> fetch_embeddings(Transport& transport, const std::string& model_id,
                                     std::span<const std::string> texts);
std::string fetch_generation(Transport& transport, const std::string& model_id, const GenerationRequest& request);

/// Embeds `texts` in batches, issuing at most `max_in_flight` batches at once.
/// A failing batch is reported with its first word and size.
std::vector<Vector> embed_batched(EmbeddingProvider& provider, const std::vector<std::string>& texts,
                                  std::size_t batch_size, std::size_t max_in_flight);

double cosine(const Vector& a, const Vector& b);

}  // namespace libra::providers
