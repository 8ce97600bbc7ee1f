#pragma once
// Two-stage deduplication: MinHash LSH over surface forms, then greedy
// embedding-cosine dedup, plus the heuristic quality filter.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pforge/minhash.hpp"
#include "pforge/types.hpp"

namespace pforge {

struct DedupCluster {
    std::string kept_id;                  // empty for heuristic rejections
    std::vector<std::string> dropped_ids;
    std::string stage;                    // minhash | embedding | heuristic
    std::optional<double> score;          // similarity; nullopt for heuristic
    std::string reason;                   // heuristic rejection code, else empty
};

struct DedupReport {
    std::vector<DedupCluster> clusters;
};

void to_json(nlohmann::json& j, const DedupCluster& c);
void from_json(const nlohmann::json& j, DedupCluster& c);

struct MinHashDedupConfig {
    double threshold = 0.9;
    int k = 128;
    int bands = 16;
    int rows = 8;
    std::uint64_t seed = 1;
};

struct DedupResult {
    std::vector<Persona> survivors; // ingestion order preserved
    DedupReport report;
};

// LSH banding proposes candidate pairs; a pair is merged iff the
// signature estimate is >= threshold. Within a merged cluster the
// earliest-ingested persona is kept. Requires bands * rows == k.
DedupResult dedup_minhash(const std::vector<Persona>& personas,
                          const MinHashDedupConfig& cfg = {});

// Greedy scan in ingestion order: a persona is dropped iff its cosine
// similarity to an already-kept persona exceeds the threshold. All
// personas must carry same-dimension, non-zero embeddings.
DedupResult dedup_embedding(const std::vector<Persona>& personas, double threshold = 0.9);

enum class RejectReason { TooShort, TooLong, RefusalPattern, OnlySymbols };
const char* to_string(RejectReason r);

// nullopt = keep.
std::optional<RejectReason> quality_filter(const Persona& p);

// Keeps passing personas in order; rejections land in the report with
// stage "heuristic".
DedupResult apply_quality_filter(const std::vector<Persona>& personas);

double cosine_similarity(const std::vector<float>& a, const std::vector<float>& b);

} // namespace pforge
