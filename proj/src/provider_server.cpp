#include "libra/provider_server.hpp"

#include <httplib.h>

#include <thread>

#include "libra/errors.hpp"

namespace libra::providers {

namespace {

void reply(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

}  // namespace

ProviderServer::ProviderServer(LogprobProvider* logprob, EmbeddingProvider* embedding, GenerationProvider* generation)
    : ProviderServer(logprob, embedding, generation, Options{}) {}

ProviderServer::ProviderServer(LogprobProvider* logprob, EmbeddingProvider* embedding, GenerationProvider* generation,
                               Options options)
    : logprob_(logprob), embedding_(embedding), generation_(generation), options_(options),
      server_(std::make_unique<httplib::Server>()) {
    auto wrap = [this](auto handler) {
        return [this, handler](const httplib::Request& req, httplib::Response& res) {
            const auto n = ++requests_;
            const auto now = ++active_;
            for (auto seen = max_concurrent_.load(); now > seen && !max_concurrent_.compare_exchange_weak(seen, now);) {
            }
            struct Leave {
                std::atomic<std::size_t>& a;
                ~Leave() { --a; }
            } leave{active_};
            if (options_.delay.count() > 0) std::this_thread::sleep_for(options_.delay);
            if (n <= options_.fail_first) {
                reply(res, options_.fail_status, Json{{"error", "injected failure"}});
                return;
            }
            try {
                const auto body = Json::parse(req.body);
                reply(res, 200, handler(body));
            } catch (const Json::exception& e) {
                reply(res, 422, Json{{"error", e.what()}});
            } catch (const ValidationError& e) {
                reply(res, 422, Json{{"error", e.what()}});
            } catch (const std::exception& e) {
                reply(res, 500, Json{{"error", e.what()}});
            }
        };
    };
    server_->Post("/v1/logprobs", wrap([this](const Json& body) {
        if (!logprob_) throw ValidationError("no logprob backend");
        const auto r = logprob_->logprobs(LogprobRequest::from_json(body));
        return Json{{"logprobs", r.logprobs}};
    }));
    server_->Post("/v1/embed", wrap([this](const Json& body) {
        if (!embedding_) throw ValidationError("no embedding backend");
        const auto texts = body.at("texts").get<std::vector<std::string>>();
        return Json{{"vectors", embedding_->embed(texts)}};
    }));
    server_->Post("/v1/generate", wrap([this](const Json& body) {
        if (!generation_) throw ValidationError("no generation backend");
        GenerationRequest r;
        r.prompt = body.at("prompt").get<std::string>();
        r.max_tokens = body.value("max_tokens", std::size_t{256});
        r.temperature = body.value("temperature", 0.0);
        return Json{{"text", generation_->generate(r)}};
    }));
}

ProviderServer::~ProviderServer() { stop(); }

int ProviderServer::bind(const std::string& host) { return server_->bind_to_any_port(host); }

bool ProviderServer::bind(const std::string& host, int port) { return server_->bind_to_port(host, port); }

void ProviderServer::serve() { server_->listen_after_bind(); }

void ProviderServer::stop() {
    if (server_) server_->stop();
}

}  // namespace libra::providers
