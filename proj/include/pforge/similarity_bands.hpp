#pragma once
// The persona-similarity-band experiment: sample persona pairs whose
// embedding cosine lies in a narrow band, create one problem per persona
// at temperature 0, and compare problem similarities.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "pforge/backend.hpp"
#include "pforge/embedder.hpp"
#include "pforge/template_registry.hpp"
#include "pforge/types.hpp"

namespace pforge {

struct BandSpec {
    double center = 0.4;
    double width = 0.01; // half-window; band is [center-width, center+width]
    int n_pairs = 20;
};

struct PersonaPair {
    std::size_t a = 0;
    std::size_t b = 0; // indices into the persona vector, a < b
    double cosine = 0.0;
};

// Distinct pairs sampled without replacement, every one satisfying the
// band predicate exactly. Random probing first, then an exhaustive scan;
// fewer than n_pairs in-band pairs raises InsufficientPairs.
std::vector<PersonaPair> sample_pairs_at_band(const std::vector<Persona>& personas,
                                              const BandSpec& band, std::uint64_t rng_seed);

struct SimilaritySummary {
    double mean = 0.0;
    double median = 0.0;
    double p25 = 0.0;
    double p75 = 0.0;
};

SimilaritySummary summarize(std::vector<double> values);

struct SimilarityExperimentResult {
    BandSpec band;
    std::vector<double> persona_pair_sims;
    std::vector<double> problem_pair_sims; // parallel, failures excluded
    SimilaritySummary summary;             // over problem_pair_sims
    int failures = 0;
};

void to_json(nlohmann::json& j, const BandSpec& b);
void from_json(const nlohmann::json& j, BandSpec& b);
void to_json(nlohmann::json& j, const SimilarityExperimentResult& r);

SimilarityExperimentResult run_similarity_experiment(
    const std::vector<Persona>& personas, const std::vector<PersonaPair>& pairs,
    const BandSpec& band, const std::string& scenario,
    const std::map<std::string, std::string>& modifiers, const TemplateRegistry& registry,
    ChatBackend& backend, Embedder& embedder);

} // namespace pforge
