#include "pforge/backend.hpp"

#include "pforge/cassette.hpp"
#include "pforge/errors.hpp"
#include "pforge/http_backend.hpp"
#include "pforge/mock_backend.hpp"

namespace pforge {

void to_json(nlohmann::json& j, const DecodingParams& d) {
    j = nlohmann::json{{"temperature", d.temperature}, {"max_tokens", d.max_tokens}};
    if (d.seed) j["seed"] = *d.seed;
    else j["seed"] = nullptr;
}

void from_json(const nlohmann::json& j, DecodingParams& d) {
    j.at("temperature").get_to(d.temperature);
    j.at("max_tokens").get_to(d.max_tokens);
    d.seed.reset();
    if (j.contains("seed") && !j.at("seed").is_null()) d.seed = j.at("seed").get<int>();
}

void validate(const BackendConfig& cfg) {
    if (cfg.max_concurrency < 1) throw ConfigError("max_concurrency must be >= 1");
    if (cfg.retry.max_attempts < 1) throw ConfigError("retry.max_attempts must be >= 1");
    if (cfg.kind != "mock" && cfg.kind != "replay" && cfg.kind != "http_openai_compatible") {
        throw ConfigError("unknown backend kind: " + cfg.kind);
    }
    if (cfg.kind == "http_openai_compatible" && cfg.base_url.empty()) {
        throw ConfigError("http backend requires base_url");
    }
    if (cfg.kind == "replay" && cfg.cassette_path.empty()) {
        throw ConfigError("replay backend requires cassette_path");
    }
}

std::unique_ptr<ChatBackend> make_backend(const BackendConfig& cfg) {
    validate(cfg);
    if (cfg.kind == "mock") {
        return std::make_unique<MockBackend>(cfg.mock_fanout, cfg.max_concurrency);
    }
    if (cfg.kind == "replay") {
        return std::make_unique<ReplayBackend>(cfg.cassette_path, cfg.max_concurrency);
    }
    return std::make_unique<HttpBackend>(cfg);
}

std::unique_ptr<Embedder> make_embedder(const EmbeddingConfig& cfg) {
    validate(cfg);
    if (cfg.kind == "mock") {
        return std::make_unique<MockEmbedder>(cfg.dim, cfg.seed);
    }
    return std::make_unique<HttpEmbedder>(cfg);
}

} // namespace pforge
