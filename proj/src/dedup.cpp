#include "pforge/dedup.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>

#include "pforge/errors.hpp"
#include "pforge/stable_hash.hpp"

namespace pforge {

void to_json(nlohmann::json& j, const DedupCluster& c) {
    j = nlohmann::json{{"kept_id", c.kept_id},
                       {"dropped_ids", c.dropped_ids},
                       {"stage", c.stage}};
    if (c.score) j["score"] = *c.score;
    else j["score"] = nullptr;
    if (!c.reason.empty()) j["reason"] = c.reason;
}

void from_json(const nlohmann::json& j, DedupCluster& c) {
    j.at("kept_id").get_to(c.kept_id);
    j.at("dropped_ids").get_to(c.dropped_ids);
    j.at("stage").get_to(c.stage);
    c.score.reset();
    if (j.contains("score") && !j.at("score").is_null()) c.score = j.at("score").get<double>();
    c.reason = j.value("reason", "");
}

namespace {

// Union-find over input indices, smallest index becomes the root so the
// earliest-ingested persona is the kept one.
class DisjointSet {
public:
    explicit DisjointSet(std::size_t n) : parent_(n) {
        std::iota(parent_.begin(), parent_.end(), std::size_t{0});
    }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (b < a) std::swap(a, b);
        parent_[b] = a;
    }

private:
    std::vector<std::size_t> parent_;
};

std::uint64_t band_key(const MinHashSignature& sig, int band, int rows) {
    std::uint64_t h = 0x6a09e667f3bcc909ULL ^ static_cast<std::uint64_t>(band);
    for (int r = 0; r < rows; ++r) {
        h = splitmix64(h ^ sig.values[static_cast<std::size_t>(band * rows + r)]);
    }
    return h;
}

} // namespace

DedupResult dedup_minhash(const std::vector<Persona>& personas, const MinHashDedupConfig& cfg) {
    if (cfg.bands * cfg.rows != cfg.k) {
        throw ConfigError("bands * rows must equal k (got " + std::to_string(cfg.bands) + "*" +
                          std::to_string(cfg.rows) + " != " + std::to_string(cfg.k) + ")");
    }

    const std::size_t n = personas.size();
    std::vector<MinHashSignature> sigs;
    sigs.reserve(n);
    for (const auto& p : personas) {
        sigs.push_back(minhash_signature(tokenize_unigrams(p.description), cfg.k, cfg.seed));
    }

    // Band buckets -> candidate pairs.
    std::vector<std::pair<std::size_t, std::size_t>> candidates;
    {
        std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets;
        for (int b = 0; b < cfg.bands; ++b) {
            buckets.clear();
            for (std::size_t i = 0; i < n; ++i) {
                buckets[band_key(sigs[i], b, cfg.rows)].push_back(i);
            }
            for (const auto& [key, members] : buckets) {
                (void)key;
                for (std::size_t a = 0; a + 1 < members.size(); ++a) {
                    for (std::size_t c = a + 1; c < members.size(); ++c) {
                        candidates.emplace_back(members[a], members[c]);
                    }
                }
            }
        }
        std::sort(candidates.begin(), candidates.end());
        candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    }

    // Verify every candidate against the signature estimate before merging.
    DisjointSet ds(n);
    std::vector<std::pair<std::pair<std::size_t, std::size_t>, double>> merges;
    for (const auto& [i, j] : candidates) {
        const double est = estimate_jaccard(sigs[i], sigs[j]);
        if (est >= cfg.threshold) {
            ds.unite(i, j);
            merges.push_back({{i, j}, est});
        }
    }

    std::map<std::size_t, DedupCluster> clusters; // root index -> cluster
    std::vector<bool> dropped(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t root = ds.find(i);
        if (root == i) continue;
        dropped[i] = true;
        auto& cl = clusters[root];
        cl.kept_id = personas[root].id;
        cl.dropped_ids.push_back(personas[i].id);
        cl.stage = "minhash";
    }
    // Cluster score: weakest merge edge inside the cluster.
    for (const auto& [pair, est] : merges) {
        const std::size_t root = ds.find(pair.first);
        auto it = clusters.find(root);
        if (it == clusters.end()) continue;
        if (!it->second.score || est < *it->second.score) it->second.score = est;
    }

    DedupResult out;
    for (std::size_t i = 0; i < n; ++i) {
        if (!dropped[i]) out.survivors.push_back(personas[i]);
    }
    for (auto& [root, cl] : clusters) out.report.clusters.push_back(std::move(cl));
    return out;
}

double cosine_similarity(const std::vector<float>& a, const std::vector<float>& b) {
    if (a.size() != b.size()) throw DimensionMismatch("embedding dimensions differ");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw ZeroNormEmbedding("zero-norm embedding");
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

DedupResult dedup_embedding(const std::vector<Persona>& personas, double threshold) {
    std::size_t dim = 0;
    for (const auto& p : personas) {
        if (!p.embedding) throw DimensionMismatch("persona " + p.id + " has no embedding");
        if (dim == 0) dim = p.embedding->size();
        if (p.embedding->size() != dim) {
            throw DimensionMismatch("persona " + p.id + " embedding dimension mismatch");
        }
    }

    DedupResult out;
    std::vector<std::size_t> kept_indices;
    std::map<std::size_t, DedupCluster> clusters; // kept index -> cluster
    for (std::size_t i = 0; i < personas.size(); ++i) {
        bool keep = true;
        for (std::size_t k : kept_indices) {
            const double cos = cosine_similarity(*personas[k].embedding, *personas[i].embedding);
            if (cos > threshold) {
                auto& cl = clusters[k];
                cl.kept_id = personas[k].id;
                cl.dropped_ids.push_back(personas[i].id);
                cl.stage = "embedding";
                if (!cl.score || cos < *cl.score) cl.score = cos;
                keep = false;
                break;
            }
        }
        if (keep) {
            kept_indices.push_back(i);
            out.survivors.push_back(personas[i]);
        }
    }
    for (auto& [k, cl] : clusters) out.report.clusters.push_back(std::move(cl));
    return out;
}

const char* to_string(RejectReason r) {
    switch (r) {
    case RejectReason::TooShort: return "TooShort";
    case RejectReason::TooLong: return "TooLong";
    case RejectReason::RefusalPattern: return "RefusalPattern";
    case RejectReason::OnlySymbols: return "OnlySymbols";
    }
    return "Unknown";
}

namespace {

const std::vector<std::string>& refusal_patterns() {
    static const std::vector<std::string> patterns = {"i'm sorry", "as an ai", "i cannot"};
    return patterns;
}

std::string ascii_lower_fold(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        // Fold U+2019 (right single quote) to ' so refusal patterns match.
        if (i + 2 < s.size() && static_cast<unsigned char>(s[i]) == 0xE2 &&
            static_cast<unsigned char>(s[i + 1]) == 0x80 &&
            static_cast<unsigned char>(s[i + 2]) == 0x99) {
            out.push_back('\'');
            i += 2;
            continue;
        }
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(s[i]))));
    }
    return out;
}

bool has_letter(const std::string& s) {
    for (unsigned char c : s) {
        if (std::isalpha(c)) return true;
        if (c >= 0x80) return true; // non-ASCII counts as linguistic content
    }
    return false;
}

} // namespace

std::optional<RejectReason> quality_filter(const Persona& p) {
    if (!has_letter(p.description)) return RejectReason::OnlySymbols;
    const int tokens = count_ws_tokens(p.description);
    if (tokens < 3) return RejectReason::TooShort;
    if (tokens > kMaxDescriptionTokens) return RejectReason::TooLong;
    const std::string lowered = ascii_lower_fold(p.description);
    for (const auto& pat : refusal_patterns()) {
        if (lowered.find(pat) != std::string::npos) return RejectReason::RefusalPattern;
    }
    return std::nullopt;
}

DedupResult apply_quality_filter(const std::vector<Persona>& personas) {
    DedupResult out;
    for (const auto& p : personas) {
        if (auto reason = quality_filter(p)) {
            DedupCluster cl;
            cl.dropped_ids.push_back(p.id);
            cl.stage = "heuristic";
            cl.reason = to_string(*reason);
            out.report.clusters.push_back(std::move(cl));
        } else {
            out.survivors.push_back(p);
        }
    }
    return out;
}

} // namespace pforge
