#pragma once
// Orchestration: declarative config, stage wiring with resumable
// checkpoints, per-stage JSONL stores, and store statistics.
//
// Stage order: ingest -> expand -> quality filter -> minhash dedup ->
// embed -> embedding dedup -> synthesize. Each stage's output is
// committed before the next starts.

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "pforge/backend.hpp"
#include "pforge/dedup.hpp"
#include "pforge/embedder.hpp"
#include "pforge/text_to_persona.hpp"

namespace pforge {

struct ExpandStageConfig {
    int iterations = kDefaultMaxIterations;
    int fanout_cap = 5;
};

struct DedupStageConfig {
    double minhash_threshold = 0.9;
    double embedding_threshold = 0.9;
    int k = 128;
    int bands = 16;
    int rows = 8;
    std::uint64_t seed = 1;
};

struct SynthStageConfig {
    std::string scenario = "math";
    std::string mode = "zero_shot";
    std::map<std::string, std::string> modifiers;
    int n_per_persona = 1;
    std::string templates_dir = "templates";
    std::string demos_file; // JSONL of {content, demo_persona?}; few-shot modes only
    DecodingParams decoding{1.0, 1024, 0};
};

struct PipelineConfig {
    std::string corpus;
    std::string out_dir;
    std::string checkpoint_dir; // defaults to <out_dir>/checkpoints
    bool deterministic_mode = true;
    int max_concurrency = 1;
    int checkpoint_every = 1000; // records per commit

    T2PConfig t2p;
    ExpandStageConfig expand;
    DedupStageConfig dedup;
    BackendConfig backend;
    EmbeddingConfig embedding;
    SynthStageConfig synth;
};

// Strict parse: unknown keys anywhere are ConfigError.
PipelineConfig parse_pipeline_config(const nlohmann::json& j);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
nlohmann::json pipeline_config_to_json(const PipelineConfig& cfg);

// Strict section parsers, shared with CLI-side config files.
BackendConfig parse_backend_config(const nlohmann::json& j, const std::string& section);
EmbeddingConfig parse_embedding_config(const nlohmann::json& j, const std::string& section);
DecodingParams parse_decoding_config(const nlohmann::json& j, const std::string& section);

// Hash of the canonical config serialization; checkpoints resume only
// when it matches.
std::string config_hash(const PipelineConfig& cfg);

struct StageCount {
    std::string stage;
    std::size_t in = 0;
    std::size_t out = 0;
};

struct RunSummary {
    std::vector<StageCount> stages;
};
void to_json(nlohmann::json& j, const RunSummary& s);

class PipelineRunner {
public:
    explicit PipelineRunner(PipelineConfig cfg);

    RunSummary run();

    // Called after every committed chunk; tests throw from here to
    // simulate a mid-stage kill.
    std::function<void(const std::string& stage, std::size_t committed_inputs)> after_commit;

    static const std::vector<std::string>& stage_names();

private:
    PipelineConfig cfg_;
    std::string hash_;
};

RunSummary run_pipeline(const PipelineConfig& cfg);

// --- stats -------------------------------------------------------------

struct StoreStats {
    std::size_t personas = 0;
    std::map<std::string, std::size_t> provenance_counts;  // from_text/from_persona/manual
    std::map<std::string, std::size_t> token_length_histogram; // "1-10", "11-20", ...
    std::map<std::string, std::size_t> dropped_by_stage;
    std::map<std::string, double> drop_rates; // stage -> dropped / original total
};
void to_json(nlohmann::json& j, const StoreStats& s);

StoreStats compute_stats(const std::filesystem::path& personas_file,
                         const std::vector<std::filesystem::path>& report_files = {});

// Referential integrity over a finished run directory: every record's
// lineage ids must resolve against earlier stage files.
std::vector<std::string> verify_lineage(const std::filesystem::path& out_dir,
                                        const std::filesystem::path& corpus);

} // namespace pforge
