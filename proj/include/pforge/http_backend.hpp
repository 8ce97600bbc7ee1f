#pragma once
// OpenAI-compatible chat-completions and embeddings over HTTP.
// Transient failures (429, 5xx, timeouts) are retried with exponential
// backoff up to retry.max_attempts; auth failures are fatal.

#include <memory>

#include "pforge/backend.hpp"
#include "pforge/embedder.hpp"

namespace pforge {

class HttpBackend : public ChatBackend {
public:
    explicit HttpBackend(BackendConfig cfg);
    ~HttpBackend() override;

    Completion complete(const std::string& prompt, const DecodingParams& decoding) override;
    std::string label() const override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

class HttpEmbedder : public Embedder {
public:
    explicit HttpEmbedder(EmbeddingConfig cfg, RetryPolicy retry = {}, int timeout_ms = 30000);
    ~HttpEmbedder() override;

    std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) override;
    int dim() const override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace pforge
