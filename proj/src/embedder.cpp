#include "pforge/embedder.hpp"

#include <cmath>

#include "pforge/errors.hpp"
#include "pforge/minhash.hpp"
#include "pforge/stable_hash.hpp"

namespace pforge {

void validate(const EmbeddingConfig& cfg) {
    if (cfg.dim < 1) throw ConfigError("embedding dim must be >= 1");
    if (cfg.kind != "mock" && cfg.kind != "http_openai_compatible") {
        throw ConfigError("unknown embedding kind: " + cfg.kind);
    }
    if (cfg.kind == "http_openai_compatible" && cfg.base_url.empty()) {
        throw ConfigError("http embedding backend requires base_url");
    }
}

namespace {

// Uniform in [-1, 1) from a counter-mode splitmix64 stream.
inline double unit_uniform(std::uint64_t state) {
    const std::uint64_t bits = splitmix64(state);
    return static_cast<double>(bits >> 11) * (2.0 / 9007199254740992.0) - 1.0;
}

} // namespace

std::vector<float> MockEmbedder::embed_one(const std::string& text) const {
    auto tokens = tokenize_words(text);
    if (tokens.empty()) tokens.push_back("");

    std::vector<double> acc(static_cast<std::size_t>(dim_), 0.0);
    for (const auto& tok : tokens) {
        const std::uint64_t base = stable_hash64(tok, seed_);
        for (int d = 0; d < dim_; ++d) {
            acc[static_cast<std::size_t>(d)] +=
                unit_uniform(base + static_cast<std::uint64_t>(d) * 0x9e3779b97f4a7c15ULL);
        }
    }

    double norm = 0.0;
    for (double v : acc) norm += v * v;
    norm = std::sqrt(norm);
    std::vector<float> out(static_cast<std::size_t>(dim_));
    for (int d = 0; d < dim_; ++d) {
        out[static_cast<std::size_t>(d)] = static_cast<float>(acc[static_cast<std::size_t>(d)] / norm);
    }
    return out;
}

std::vector<std::vector<float>> MockEmbedder::embed(const std::vector<std::string>& texts) {
    std::vector<std::vector<float>> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_one(t));
    return out;
}

} // namespace pforge
