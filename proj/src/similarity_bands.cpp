#include "pforge/similarity_bands.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "pforge/dedup.hpp"
#include "pforge/errors.hpp"
#include "pforge/synthesizer.hpp"

namespace pforge {

namespace {

bool in_band(double cosine, const BandSpec& band) {
    return cosine >= band.center - band.width && cosine <= band.center + band.width;
}

} // namespace

std::vector<PersonaPair> sample_pairs_at_band(const std::vector<Persona>& personas,
                                              const BandSpec& band, std::uint64_t rng_seed) {
    if (band.width <= 0) throw ConfigError("band width must be > 0");
    if (band.center < 0 || band.center > 1) throw ConfigError("band center must be in [0,1]");
    if (band.n_pairs < 1) throw ConfigError("n_pairs must be >= 1");

    std::vector<std::size_t> with_embedding;
    for (std::size_t i = 0; i < personas.size(); ++i) {
        if (personas[i].embedding) with_embedding.push_back(i);
    }
    if (with_embedding.size() < 2) {
        throw InsufficientPairs("need at least 2 personas with embeddings");
    }

    const std::size_t n = with_embedding.size();
    auto cosine_of = [&](std::size_t x, std::size_t y) {
        return cosine_similarity(*personas[with_embedding[x]].embedding,
                                 *personas[with_embedding[y]].embedding);
    };

    std::mt19937_64 rng(rng_seed);
    std::vector<PersonaPair> out;
    std::set<std::pair<std::size_t, std::size_t>> taken;

    // Random probing with exact predicate check before acceptance.
    const std::uint64_t budget = 200ULL * static_cast<std::uint64_t>(band.n_pairs);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::uint64_t probe = 0;
         probe < budget && out.size() < static_cast<std::size_t>(band.n_pairs); ++probe) {
        std::size_t x = pick(rng), y = pick(rng);
        if (x == y) continue;
        if (x > y) std::swap(x, y);
        if (taken.count({x, y})) continue;
        const double cos = cosine_of(x, y);
        if (!in_band(cos, band)) continue;
        taken.insert({x, y});
        out.push_back(PersonaPair{with_embedding[x], with_embedding[y], cos});
    }

    if (out.size() < static_cast<std::size_t>(band.n_pairs)) {
        // Exhaustive fallback: enumerate remaining in-band pairs, then
        // sample without replacement.
        std::vector<PersonaPair> remaining;
        for (std::size_t x = 0; x + 1 < n; ++x) {
            for (std::size_t y = x + 1; y < n; ++y) {
                if (taken.count({x, y})) continue;
                const double cos = cosine_of(x, y);
                if (in_band(cos, band)) {
                    remaining.push_back(PersonaPair{with_embedding[x], with_embedding[y], cos});
                }
            }
        }
        if (out.size() + remaining.size() < static_cast<std::size_t>(band.n_pairs)) {
            throw InsufficientPairs(
                "band " + std::to_string(band.center) + " holds only " +
                std::to_string(out.size() + remaining.size()) + " pairs, need " +
                std::to_string(band.n_pairs));
        }
        std::shuffle(remaining.begin(), remaining.end(), rng);
        for (auto& p : remaining) {
            if (out.size() >= static_cast<std::size_t>(band.n_pairs)) break;
            out.push_back(p);
        }
    }
    return out;
}

SimilaritySummary summarize(std::vector<double> values) {
    SimilaritySummary s;
    if (values.empty()) return s;
    std::sort(values.begin(), values.end());

    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());

    auto percentile = [&](double q) {
        const double pos = q * static_cast<double>(values.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
        if (lo == hi) return values[lo];
        const double frac = pos - static_cast<double>(lo);
        return values[lo] * (1.0 - frac) + values[hi] * frac;
    };
    s.p25 = percentile(0.25);
    s.median = percentile(0.5);
    s.p75 = percentile(0.75);
    return s;
}

void to_json(nlohmann::json& j, const BandSpec& b) {
    j = nlohmann::json{{"center", b.center}, {"width", b.width}, {"n_pairs", b.n_pairs}};
}

void from_json(const nlohmann::json& j, BandSpec& b) {
    j.at("center").get_to(b.center);
    b.width = j.value("width", 0.01);
    j.at("n_pairs").get_to(b.n_pairs);
}

void to_json(nlohmann::json& j, const SimilarityExperimentResult& r) {
    j = nlohmann::json{{"band", r.band},
                       {"persona_pair_sims", r.persona_pair_sims},
                       {"problem_pair_sims", r.problem_pair_sims},
                       {"summary",
                        {{"mean", r.summary.mean},
                         {"median", r.summary.median},
                         {"p25", r.summary.p25},
                         {"p75", r.summary.p75}}},
                       {"failures", r.failures}};
}

SimilarityExperimentResult run_similarity_experiment(
    const std::vector<Persona>& personas, const std::vector<PersonaPair>& pairs,
    const BandSpec& band, const std::string& scenario,
    const std::map<std::string, std::string>& modifiers, const TemplateRegistry& registry,
    ChatBackend& backend, Embedder& embedder) {
    SimilarityExperimentResult result;
    result.band = band;

    PromptSpec base;
    base.mode = PromptMode::zero_shot;
    base.scenario = scenario;
    base.modifiers = modifiers;
    base.decoding = DecodingParams{0.0, 1024, 0}; // greedy decoding

    for (const auto& pair : pairs) {
        try {
            PromptSpec sa = base;
            sa.persona = personas[pair.a];
            PromptSpec sb = base;
            sb.persona = personas[pair.b];
            const std::string problem_a = backend.complete(render_prompt(sa, registry), sa.decoding).text;
            const std::string problem_b = backend.complete(render_prompt(sb, registry), sb.decoding).text;
            const auto embedded = embedder.embed({problem_a, problem_b});
            const double cos = cosine_similarity(embedded[0], embedded[1]);
            result.persona_pair_sims.push_back(pair.cosine);
            result.problem_pair_sims.push_back(cos);
        } catch (const AuthError&) {
            throw;
        } catch (const Error&) {
            ++result.failures;
        }
    }
    result.summary = summarize(result.problem_pair_sims);
    return result;
}

} // namespace pforge
