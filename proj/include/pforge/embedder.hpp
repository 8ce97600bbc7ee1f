#pragma once
// Text embedding providers. All outputs are L2-normalized, so cosine
// similarity equals the dot product.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace pforge {

struct EmbeddingConfig {
    std::string kind = "mock"; // mock | http_openai_compatible
    std::string model_name;
    int dim = 512;
    std::string base_url;
    std::string api_key_env_var;
    std::uint64_t seed = 7; // mock projection seed
};

void validate(const EmbeddingConfig& cfg); // throws ConfigError

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) = 0;
    virtual int dim() const = 0;
};

// Hash-seeded random projection of the token multiset, normalized.
// Identical texts map to identical vectors; texts sharing most tokens map
// to high cosine, which is what the dedup and band-sampling paths need.
class MockEmbedder : public Embedder {
public:
    explicit MockEmbedder(int dim = 512, std::uint64_t seed = 7) : dim_(dim), seed_(seed) {}

    std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) override;
    int dim() const override { return dim_; }

    std::vector<float> embed_one(const std::string& text) const;

private:
    int dim_;
    std::uint64_t seed_;
};

std::unique_ptr<Embedder> make_embedder(const EmbeddingConfig& cfg);

} // namespace pforge
