#include "pforge/http_backend.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "pforge/errors.hpp"

namespace pforge {

namespace {

using nlohmann::json;

struct UrlParts {
    std::string host; // scheme://host[:port]
    std::string path_prefix;
};

UrlParts split_base_url(const std::string& base_url) {
    const auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("base_url must include a scheme: " + base_url);
    }
    const auto path_start = base_url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {base_url, ""};
    std::string prefix = base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {base_url.substr(0, path_start), prefix};
}

std::string bearer_from_env(const std::string& env_var) {
    if (env_var.empty()) return "";
    const char* value = std::getenv(env_var.c_str());
    if (value == nullptr || *value == '\0') {
        throw AuthError("API key environment variable not set: " + env_var);
    }
    return value;
}

bool transient_status(int status) {
    return status == 429 || (status >= 500 && status < 600);
}

// Runs one POST with retries; returns the parsed body of the successful
// response and the attempt count.
json post_with_retries(httplib::Client& client, const std::string& path, const json& body,
                       const httplib::Headers& headers, const RetryPolicy& retry,
                       int& attempts_out) {
    int last_status = 0;
    bool saw_timeout = false;
    for (int attempt = 1; attempt <= retry.max_attempts; ++attempt) {
        attempts_out = attempt;
        auto res = client.Post(path, headers, body.dump(), "application/json");
        if (res) {
            if (res->status == 200) {
                try {
                    return json::parse(res->body);
                } catch (const json::exception& e) {
                    throw BackendError(std::string("unparseable backend response: ") + e.what());
                }
            }
            if (res->status == 401 || res->status == 403) {
                throw AuthError("backend rejected credentials (HTTP " +
                                std::to_string(res->status) + ")");
            }
            if (!transient_status(res->status)) {
                throw BackendError("backend error HTTP " + std::to_string(res->status) + ": " +
                                   res->body);
            }
            last_status = res->status;
        } else {
            saw_timeout = true;
        }
        if (attempt < retry.max_attempts) {
            const auto delay = retry.backoff_base_ms * (1 << (attempt - 1));
            std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }
    }
    if (last_status == 429) {
        throw RateLimitedExhausted("rate limited after " + std::to_string(retry.max_attempts) +
                                   " attempts");
    }
    if (saw_timeout && last_status == 0) {
        throw TimeoutError("no response after " + std::to_string(retry.max_attempts) +
                           " attempts");
    }
    throw BackendError("transient HTTP " + std::to_string(last_status) + " persisted after " +
                       std::to_string(retry.max_attempts) + " attempts");
}

std::unique_ptr<httplib::Client> make_client(const std::string& host, int timeout_ms) {
    auto client = std::make_unique<httplib::Client>(host);
    client->set_connection_timeout(0, timeout_ms * 1000);
    client->set_read_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
    client->set_write_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
    return client;
}

} // namespace

struct HttpBackend::Impl {
    BackendConfig cfg;
    UrlParts url;
    std::string api_key;
    ConcurrencyGate gate;

    explicit Impl(BackendConfig c)
        : cfg(std::move(c)), url(split_base_url(cfg.base_url)),
          api_key(bearer_from_env(cfg.api_key_env_var)), gate(cfg.max_concurrency) {}
};

HttpBackend::HttpBackend(BackendConfig cfg) : impl_(std::make_unique<Impl>(std::move(cfg))) {}
HttpBackend::~HttpBackend() = default;

std::string HttpBackend::label() const {
    return impl_->cfg.model_name.empty() ? "http" : impl_->cfg.model_name;
}

Completion HttpBackend::complete(const std::string& prompt, const DecodingParams& decoding) {
    ConcurrencyGate::Pass pass(impl_->gate);

    json body = {{"model", impl_->cfg.model_name},
                 {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
                 {"temperature", decoding.temperature},
                 {"max_tokens", decoding.max_tokens}};
    if (decoding.seed) body["seed"] = *decoding.seed;

    httplib::Headers headers;
    if (!impl_->api_key.empty()) headers.emplace("Authorization", "Bearer " + impl_->api_key);

    auto client = make_client(impl_->url.host, impl_->cfg.timeout_ms);
    int attempts = 1;
    const json reply = post_with_retries(*client, impl_->url.path_prefix + "/chat/completions",
                                         body, headers, impl_->cfg.retry, attempts);

    Completion c;
    try {
        c.text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw BackendError(std::string("malformed chat completion payload: ") + e.what());
    }
    if (reply.contains("usage")) {
        c.prompt_tokens = reply["usage"].value("prompt_tokens", 0);
        c.completion_tokens = reply["usage"].value("completion_tokens", 0);
    }
    c.attempts = attempts;
    c.producer = label();
    return c;
}

struct HttpEmbedder::Impl {
    EmbeddingConfig cfg;
    RetryPolicy retry;
    int timeout_ms;
    UrlParts url;
    std::string api_key;

    Impl(EmbeddingConfig c, RetryPolicy r, int t)
        : cfg(std::move(c)), retry(r), timeout_ms(t), url(split_base_url(cfg.base_url)),
          api_key(bearer_from_env(cfg.api_key_env_var)) {}
};

HttpEmbedder::HttpEmbedder(EmbeddingConfig cfg, RetryPolicy retry, int timeout_ms)
    : impl_(std::make_unique<Impl>(std::move(cfg), retry, timeout_ms)) {}
HttpEmbedder::~HttpEmbedder() = default;

int HttpEmbedder::dim() const {
    return impl_->cfg.dim;
}

std::vector<std::vector<float>> HttpEmbedder::embed(const std::vector<std::string>& texts) {
    json body = {{"model", impl_->cfg.model_name},
                 {"input", texts},
                 {"dimensions", impl_->cfg.dim}};
    httplib::Headers headers;
    if (!impl_->api_key.empty()) headers.emplace("Authorization", "Bearer " + impl_->api_key);

    auto client = make_client(impl_->url.host, impl_->timeout_ms);
    int attempts = 1;
    const json reply = post_with_retries(*client, impl_->url.path_prefix + "/embeddings", body,
                                         headers, impl_->retry, attempts);

    std::vector<std::vector<float>> out;
    try {
        for (const auto& row : reply.at("data")) {
            auto vec = row.at("embedding").get<std::vector<float>>();
            if (vec.size() != static_cast<std::size_t>(impl_->cfg.dim)) {
                throw DimensionMismatch("provider returned dim " + std::to_string(vec.size()) +
                                        ", expected " + std::to_string(impl_->cfg.dim));
            }
            double norm = 0.0;
            for (float v : vec) norm += static_cast<double>(v) * v;
            norm = std::sqrt(norm);
            if (norm == 0.0) throw ZeroNormEmbedding("provider returned zero vector");
            for (float& v : vec) v = static_cast<float>(v / norm);
            out.push_back(std::move(vec));
        }
    } catch (const json::exception& e) {
        throw BackendError(std::string("malformed embeddings payload: ") + e.what());
    }
    return out;
}

} // namespace pforge
