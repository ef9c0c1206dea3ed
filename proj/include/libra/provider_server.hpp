#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <string>

#include "libra/providers.hpp"

namespace httplib {
class Server;
}

namespace libra::providers {

/// Serves in-process providers over the wire protocol (/v1/logprobs,
/// /v1/embed, /v1/generate). Counts concurrent requests and can inject
/// failures, which makes it double as the test backend for the clients.
class ProviderServer {
public:
    struct Options {
        std::size_t fail_first = 0;  // this many requests get `fail_status`
        int fail_status = 503;
        std::chrono::milliseconds delay{0};
    };

    ProviderServer(LogprobProvider* logprob, EmbeddingProvider* embedding, GenerationProvider* generation,
                   Options options);
    ProviderServer(LogprobProvider* logprob, EmbeddingProvider* embedding, GenerationProvider* generation);
    ~ProviderServer();
    ProviderServer(const ProviderServer&) = delete;
    ProviderServer& operator=(const ProviderServer&) = delete;

    /// Binds to an ephemeral port and returns it.
    int bind(const std::string& host = "127.0.0.1");
    bool bind(const std::string& host, int port);
    /// Blocks until stop().
    void serve();
    void stop();

    std::size_t requests() const noexcept { return requests_.load(); }
    std::size_t max_concurrent() const noexcept { return max_concurrent_.load(); }

private:
    LogprobProvider* logprob_;
    EmbeddingProvider* embedding_;
    GenerationProvider* generation_;
    Options options_;
    std::unique_ptr<httplib::Server> server_;
    std::atomic<std::size_t> requests_{0};
    std::atomic<std::size_t> active_{0};
    std::atomic<std::size_t> max_concurrent_{0};
};

}  // namespace libra::providers
