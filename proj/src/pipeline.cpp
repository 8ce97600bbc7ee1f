#include "pforge/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_set>

#include "pforge/json_io.hpp"
#include "pforge/persona_to_persona.hpp"
#include "pforge/solutions.hpp"
#include "pforge/stable_hash.hpp"
#include "pforge/synthesizer.hpp"

namespace pforge {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void require_keys(const json& obj, const std::set<std::string>& allowed,
                  const std::string& section) {
    if (!obj.is_object()) throw ConfigError("config section " + section + " must be an object");
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!allowed.count(key)) {
            throw ConfigError("unknown config key \"" + key + "\" in " + section);
        }
    }
}

} // namespace

DecodingParams parse_decoding_config(const json& j, const std::string& section) {
    require_keys(j, {"temperature", "max_tokens", "seed"}, section);
    DecodingParams d;
    d.temperature = j.value("temperature", 1.0);
    d.max_tokens = j.value("max_tokens", 1024);
    if (j.contains("seed") && !j.at("seed").is_null()) d.seed = j.at("seed").get<int>();
    return d;
}

BackendConfig parse_backend_config(const json& j, const std::string& section) {
    require_keys(j,
                 {"kind", "base_url", "model_name", "api_key_env_var", "max_concurrency", "retry",
                  "timeout_ms", "mock_fanout", "cassette_path"},
                 section);
    BackendConfig b;
    b.kind = j.value("kind", "mock");
    b.base_url = j.value("base_url", "");
    b.model_name = j.value("model_name", "");
    b.api_key_env_var = j.value("api_key_env_var", "");
    b.max_concurrency = j.value("max_concurrency", 4);
    if (j.contains("retry")) {
        require_keys(j.at("retry"), {"max_attempts", "backoff_base_ms"}, section + ".retry");
        b.retry.max_attempts = j.at("retry").value("max_attempts", 3);
        b.retry.backoff_base_ms = j.at("retry").value("backoff_base_ms", 100);
    }
    b.timeout_ms = j.value("timeout_ms", 30000);
    b.mock_fanout = j.value("mock_fanout", 2);
    b.cassette_path = j.value("cassette_path", "");
    return b;
}

EmbeddingConfig parse_embedding_config(const json& j, const std::string& section) {
    require_keys(j, {"kind", "model_name", "dim", "base_url", "api_key_env_var", "seed"}, section);
    EmbeddingConfig e;
    e.kind = j.value("kind", "mock");
    e.model_name = j.value("model_name", "");
    e.dim = j.value("dim", 512);
    e.base_url = j.value("base_url", "");
    e.api_key_env_var = j.value("api_key_env_var", "");
    e.seed = j.value("seed", 7ULL);
    return e;
}

PipelineConfig parse_pipeline_config(const json& j) {
    require_keys(j,
                 {"corpus", "out_dir", "checkpoint_dir", "deterministic_mode", "max_concurrency",
                  "checkpoint_every", "t2p", "expand", "dedup", "backend", "embedding",
                  "synthesize"},
                 "(top level)");

    PipelineConfig cfg;
    if (!j.contains("corpus")) throw ConfigError("config requires \"corpus\"");
    if (!j.contains("out_dir")) throw ConfigError("config requires \"out_dir\"");
    cfg.corpus = j.at("corpus").get<std::string>();
    cfg.out_dir = j.at("out_dir").get<std::string>();
    cfg.checkpoint_dir = j.value("checkpoint_dir", "");
    cfg.deterministic_mode = j.value("deterministic_mode", true);
    cfg.max_concurrency = j.value("max_concurrency", 1);
    cfg.checkpoint_every = j.value("checkpoint_every", 1000);

    if (j.contains("t2p")) {
        const auto& t = j.at("t2p");
        require_keys(t,
                     {"relation_words", "granularity_instruction", "max_personas_per_text",
                      "max_text_chars"},
                     "t2p");
        if (t.contains("relation_words")) {
            cfg.t2p.relation_words = t.at("relation_words").get<std::vector<std::string>>();
        }
        const std::string g = t.value("granularity_instruction", "as_specific_as_possible");
        if (g == "as_specific_as_possible") {
            cfg.t2p.granularity_instruction = GranularityInstruction::as_specific_as_possible;
        } else if (g == "coarse") {
            cfg.t2p.granularity_instruction = GranularityInstruction::coarse;
        } else {
            throw ConfigError("unknown granularity_instruction: " + g);
        }
        cfg.t2p.max_personas_per_text = t.value("max_personas_per_text", 3);
        cfg.t2p.max_text_chars = t.value("max_text_chars", 4000);
    }
    if (j.contains("expand")) {
        const auto& e = j.at("expand");
        require_keys(e, {"iterations", "fanout_cap"}, "expand");
        cfg.expand.iterations = e.value("iterations", kDefaultMaxIterations);
        cfg.expand.fanout_cap = e.value("fanout_cap", 5);
    }
    if (j.contains("dedup")) {
        const auto& d = j.at("dedup");
        require_keys(d,
                     {"minhash_threshold", "embedding_threshold", "k", "bands", "rows", "seed"},
                     "dedup");
        cfg.dedup.minhash_threshold = d.value("minhash_threshold", 0.9);
        cfg.dedup.embedding_threshold = d.value("embedding_threshold", 0.9);
        cfg.dedup.k = d.value("k", 128);
        cfg.dedup.bands = d.value("bands", 16);
        cfg.dedup.rows = d.value("rows", 8);
        cfg.dedup.seed = d.value("seed", 1ULL);
    }
    if (j.contains("backend")) cfg.backend = parse_backend_config(j.at("backend"), "backend");
    if (j.contains("embedding")) cfg.embedding = parse_embedding_config(j.at("embedding"), "embedding");
    if (j.contains("synthesize")) {
        const auto& s = j.at("synthesize");
        require_keys(s,
                     {"scenario", "mode", "modifiers", "n_per_persona", "templates_dir",
                      "demos_file", "decoding"},
                     "synthesize");
        cfg.synth.scenario = s.value("scenario", "math");
        cfg.synth.mode = s.value("mode", "zero_shot");
        if (s.contains("modifiers")) {
            cfg.synth.modifiers = s.at("modifiers").get<std::map<std::string, std::string>>();
        }
        cfg.synth.n_per_persona = s.value("n_per_persona", 1);
        cfg.synth.templates_dir = s.value("templates_dir", "templates");
        cfg.synth.demos_file = s.value("demos_file", "");
        if (s.contains("decoding")) {
            cfg.synth.decoding = parse_decoding_config(s.at("decoding"), "synthesize.decoding");
        }
    }

    // Cross-field validation.
    for (double t : {cfg.dedup.minhash_threshold, cfg.dedup.embedding_threshold}) {
        if (t < 0.0 || t > 1.0) throw ConfigError("dedup thresholds must be in [0,1]");
    }
    if (cfg.max_concurrency < 1) throw ConfigError("max_concurrency must be >= 1");
    if (cfg.checkpoint_every < 1) throw ConfigError("checkpoint_every must be >= 1");
    validate(cfg.t2p);
    validate(cfg.backend);
    validate(cfg.embedding);
    if (cfg.deterministic_mode && cfg.backend.kind == "http_openai_compatible") {
        throw ConfigError("deterministic_mode requires a mock or replay backend");
    }
    if (cfg.checkpoint_dir.empty()) {
        cfg.checkpoint_dir = (fs::path(cfg.out_dir) / "checkpoints").string();
    }
    return cfg;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
    return parse_pipeline_config(j);
}

json pipeline_config_to_json(const PipelineConfig& cfg) {
    json retry = {{"max_attempts", cfg.backend.retry.max_attempts},
                  {"backoff_base_ms", cfg.backend.retry.backoff_base_ms}};
    return json{
        {"corpus", cfg.corpus},
        {"out_dir", cfg.out_dir},
        {"checkpoint_dir", cfg.checkpoint_dir},
        {"deterministic_mode", cfg.deterministic_mode},
        {"max_concurrency", cfg.max_concurrency},
        {"checkpoint_every", cfg.checkpoint_every},
        {"t2p",
         {{"relation_words", cfg.t2p.relation_words},
          {"granularity_instruction",
           cfg.t2p.granularity_instruction == GranularityInstruction::coarse
               ? "coarse"
               : "as_specific_as_possible"},
          {"max_personas_per_text", cfg.t2p.max_personas_per_text},
          {"max_text_chars", cfg.t2p.max_text_chars}}},
        {"expand", {{"iterations", cfg.expand.iterations}, {"fanout_cap", cfg.expand.fanout_cap}}},
        {"dedup",
         {{"minhash_threshold", cfg.dedup.minhash_threshold},
          {"embedding_threshold", cfg.dedup.embedding_threshold},
          {"k", cfg.dedup.k},
          {"bands", cfg.dedup.bands},
          {"rows", cfg.dedup.rows},
          {"seed", cfg.dedup.seed}}},
        {"backend",
         {{"kind", cfg.backend.kind},
          {"base_url", cfg.backend.base_url},
          {"model_name", cfg.backend.model_name},
          {"api_key_env_var", cfg.backend.api_key_env_var},
          {"max_concurrency", cfg.backend.max_concurrency},
          {"retry", retry},
          {"timeout_ms", cfg.backend.timeout_ms},
          {"mock_fanout", cfg.backend.mock_fanout},
          {"cassette_path", cfg.backend.cassette_path}}},
        {"embedding",
         {{"kind", cfg.embedding.kind},
          {"model_name", cfg.embedding.model_name},
          {"dim", cfg.embedding.dim},
          {"base_url", cfg.embedding.base_url},
          {"api_key_env_var", cfg.embedding.api_key_env_var},
          {"seed", cfg.embedding.seed}}},
        {"synthesize",
         {{"scenario", cfg.synth.scenario},
          {"mode", cfg.synth.mode},
          {"modifiers", cfg.synth.modifiers},
          {"n_per_persona", cfg.synth.n_per_persona},
          {"templates_dir", cfg.synth.templates_dir},
          {"demos_file", cfg.synth.demos_file},
          {"decoding", cfg.synth.decoding}}}};
}

std::string config_hash(const PipelineConfig& cfg) {
    return to_hex16(stable_hash64(pipeline_config_to_json(cfg).dump()));
}

void to_json(json& j, const RunSummary& s) {
    j = json::object();
    json stages = json::array();
    for (const auto& st : s.stages) {
        stages.push_back(json{{"stage", st.stage}, {"in", st.in}, {"out", st.out}});
    }
    j["stages"] = stages;
}

const std::vector<std::string>& PipelineRunner::stage_names() {
    static const std::vector<std::string> names = {
        "01_ingest",        "02_expand", "03_filter",     "04_dedup_minhash",
        "05_embed",         "06_dedup_embedding", "07_synthesize"};
    return names;
}

namespace {

struct StageProgress {
    std::size_t input_ordinal = 0;
    std::size_t record_ordinal = 0;
    std::uint64_t byte_offset = 0;
    std::uint64_t aux_byte_offset = 0; // side files (skip records)
    bool done = false;
    std::string config_hash;
};

fs::path checkpoint_path(const PipelineConfig& cfg, const std::string& stage) {
    return fs::path(cfg.checkpoint_dir) / (stage + ".json");
}

std::optional<StageProgress> load_progress(const PipelineConfig& cfg, const std::string& stage,
                                           const std::string& hash) {
    const auto path = checkpoint_path(cfg, stage);
    if (!fs::exists(path)) return std::nullopt;
    std::ifstream in(path);
    json j;
    try {
        in >> j;
    } catch (const json::exception&) {
        return std::nullopt; // torn checkpoint: restart the stage
    }
    StageProgress p;
    p.input_ordinal = j.value("input_ordinal", 0ULL);
    p.record_ordinal = j.value("record_ordinal", 0ULL);
    p.byte_offset = j.value("byte_offset", 0ULL);
    p.aux_byte_offset = j.value("aux_byte_offset", 0ULL);
    p.done = j.value("done", false);
    p.config_hash = j.value("config_hash", "");
    if (p.config_hash != hash) return std::nullopt; // resume only on matching config
    return p;
}

void save_progress(const PipelineConfig& cfg, const std::string& stage, const StageProgress& p) {
    fs::create_directories(cfg.checkpoint_dir);
    const json j = {{"stage", stage},
                    {"input_ordinal", p.input_ordinal},
                    {"record_ordinal", p.record_ordinal},
                    {"byte_offset", p.byte_offset},
                    {"aux_byte_offset", p.aux_byte_offset},
                    {"done", p.done},
                    {"config_hash", p.config_hash}};
    std::ofstream out(checkpoint_path(cfg, stage));
    out << j.dump(2) << '\n';
}

// Truncate a partially written output to the last committed byte offset.
void truncate_to(const fs::path& path, std::uint64_t offset) {
    if (!fs::exists(path)) {
        if (offset == 0) return;
        throw DataError("checkpointed output missing: " + path.string());
    }
    std::error_code ec;
    fs::resize_file(path, offset, ec);
    if (ec) throw DataError("cannot truncate " + path.string() + ": " + ec.message());
}

std::size_t count_lines(const fs::path& path) {
    if (!fs::exists(path)) return 0;
    std::ifstream in(path);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        if (!line.empty()) ++n;
    }
    return n;
}

std::vector<Demo> load_demos(const SynthStageConfig& synth, ChatBackend& backend) {
    std::vector<Demo> demos;
    if (synth.demos_file.empty()) return demos;
    std::size_t line_no = 0;
    for (const auto& line : read_lines(synth.demos_file)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw CorruptRecord(synth.demos_file, line_no, e.what());
        }
        Demo d;
        d.content = j.at("content").get<std::string>();
        if (j.contains("demo_persona")) d.demo_persona = j.at("demo_persona").get<Persona>();
        demos.push_back(std::move(d));
    }
    if (synth.mode == "persona_enhanced_few_shot") {
        for (auto& d : demos) {
            if (!d.demo_persona) {
                auto derived = derive_demo_personas({d.content}, backend);
                if (derived.empty()) {
                    throw DemoPersonaMissing("could not derive a persona for a demo");
                }
                d.demo_persona = derived.front().demo_persona;
            }
        }
    }
    return demos;
}

} // namespace

PipelineRunner::PipelineRunner(PipelineConfig cfg) : cfg_(std::move(cfg)) {
    hash_ = config_hash(cfg_);
}

RunSummary PipelineRunner::run() {
    if (!fs::exists(cfg_.corpus)) throw ConfigError("corpus not found: " + cfg_.corpus);
    if (!fs::exists(cfg_.synth.templates_dir)) {
        throw ConfigError("templates dir not found: " + cfg_.synth.templates_dir);
    }
    if (!cfg_.synth.demos_file.empty() && !fs::exists(cfg_.synth.demos_file)) {
        throw ConfigError("demos file not found: " + cfg_.synth.demos_file);
    }
    fs::create_directories(cfg_.out_dir);

    const int concurrency = cfg_.deterministic_mode ? 1 : cfg_.max_concurrency;
    auto backend = make_backend(cfg_.backend);
    auto embedder = make_embedder(cfg_.embedding);
    const TemplateRegistry registry = TemplateRegistry::load_dir(cfg_.synth.templates_dir);

    const fs::path out(cfg_.out_dir);
    RunSummary summary;

    auto commit_hook = [&](const std::string& stage, std::size_t inputs) {
        if (after_commit) after_commit(stage, inputs);
    };

    // --- 01 ingest: corpus -> personas --------------------------------
    const auto corpus = read_jsonl<SourceText>(cfg_.corpus);
    const fs::path ingest_file = out / "01_ingest" / "personas.jsonl";
    const fs::path ingest_skips = out / "01_ingest" / "skips.jsonl";
    {
        const std::string stage = "01_ingest";
        auto progress = load_progress(cfg_, stage, hash_);
        if (!(progress && progress->done)) {
            StageProgress p = progress.value_or(StageProgress{});
            p.config_hash = hash_;
            truncate_to(ingest_file, p.byte_offset);
            truncate_to(ingest_skips, p.aux_byte_offset);
            const std::uint64_t base_offset = p.byte_offset;
            const std::uint64_t aux_base_offset = p.aux_byte_offset;
            JsonlWriter writer(ingest_file, p.byte_offset > 0);
            JsonlWriter skip_writer(ingest_skips, p.aux_byte_offset > 0);

            RunOptions opts;
            opts.max_concurrency = concurrency;
            while (p.input_ordinal < corpus.size()) {
                const std::size_t chunk_end =
                    std::min(corpus.size(),
                             p.input_ordinal + static_cast<std::size_t>(cfg_.checkpoint_every));
                const std::vector<SourceText> chunk(corpus.begin() +
                                                        static_cast<std::ptrdiff_t>(p.input_ordinal),
                                                    corpus.begin() +
                                                        static_cast<std::ptrdiff_t>(chunk_end));
                const T2PResult r = run_text_to_persona(chunk, cfg_.t2p, *backend, opts);
                for (const auto& persona : r.personas) writer.write(persona);
                for (const auto& s : r.skips) {
                    skip_writer.write_line(json{{"subject_id", s.subject_id},
                                                {"detail", s.detail},
                                                {"error", s.error}}
                                               .dump());
                }
                writer.flush();
                skip_writer.flush();
                p.input_ordinal = chunk_end;
                p.record_ordinal += r.personas.size();
                p.byte_offset = base_offset + writer.bytes_written();
                p.aux_byte_offset = aux_base_offset + skip_writer.bytes_written();
                save_progress(cfg_, stage, p);
                commit_hook(stage, p.input_ordinal);
            }
            p.done = true;
            save_progress(cfg_, stage, p);
        }
        summary.stages.push_back({stage, corpus.size(), count_lines(ingest_file)});
    }

    // --- 02 expand: personas -> graph ----------------------------------
    const fs::path nodes_file = out / "02_expand" / "nodes.jsonl";
    const fs::path edges_file = out / "02_expand" / "edges.jsonl";
    {
        const std::string stage = "02_expand";
        const auto seeds = read_jsonl<Persona>(ingest_file);
        auto progress = load_progress(cfg_, stage, hash_);
        if (!(progress && progress->done)) {
            ExpandOptions opts;
            opts.iterations = cfg_.expand.iterations;
            opts.fanout_cap = cfg_.expand.fanout_cap;
            opts.max_concurrency = concurrency;
            const ExpandResult r = expand_graph(seeds, opts, *backend);
            write_jsonl(nodes_file, r.graph.nodes);
            write_jsonl(edges_file, r.graph.edges);
            StageProgress p;
            p.config_hash = hash_;
            p.record_ordinal = r.graph.nodes.size();
            p.input_ordinal = seeds.size();
            p.done = true;
            save_progress(cfg_, stage, p);
            commit_hook(stage, seeds.size());
        }
        summary.stages.push_back({stage, seeds.size(), count_lines(nodes_file)});
    }

    // --- 03 quality filter ---------------------------------------------
    const fs::path filter_file = out / "03_filter" / "personas.jsonl";
    {
        const std::string stage = "03_filter";
        const auto nodes = read_jsonl<Persona>(nodes_file);
        auto progress = load_progress(cfg_, stage, hash_);
        if (!(progress && progress->done)) {
            const DedupResult r = apply_quality_filter(nodes);
            write_jsonl(filter_file, r.survivors);
            write_jsonl(out / "03_filter" / "report.jsonl", r.report.clusters);
            StageProgress p;
            p.config_hash = hash_;
            p.input_ordinal = nodes.size();
            p.record_ordinal = r.survivors.size();
            p.done = true;
            save_progress(cfg_, stage, p);
            commit_hook(stage, nodes.size());
        }
        summary.stages.push_back({stage, nodes.size(), count_lines(filter_file)});
    }

    // --- 04 minhash dedup ------------------------------------------------
    const fs::path minhash_file = out / "04_dedup_minhash" / "personas.jsonl";
    {
        const std::string stage = "04_dedup_minhash";
        const auto personas = read_jsonl<Persona>(filter_file);
        auto progress = load_progress(cfg_, stage, hash_);
        if (!(progress && progress->done)) {
            MinHashDedupConfig mh;
            mh.threshold = cfg_.dedup.minhash_threshold;
            mh.k = cfg_.dedup.k;
            mh.bands = cfg_.dedup.bands;
            mh.rows = cfg_.dedup.rows;
            mh.seed = cfg_.dedup.seed;
            const DedupResult r = dedup_minhash(personas, mh);
            write_jsonl(minhash_file, r.survivors);
            write_jsonl(out / "04_dedup_minhash" / "report.jsonl", r.report.clusters);
            StageProgress p;
            p.config_hash = hash_;
            p.input_ordinal = personas.size();
            p.record_ordinal = r.survivors.size();
            p.done = true;
            save_progress(cfg_, stage, p);
            commit_hook(stage, personas.size());
        }
        summary.stages.push_back({stage, personas.size(), count_lines(minhash_file)});
    }

    // --- 05 embed ---------------------------------------------------------
    const fs::path embed_file = out / "05_embed" / "personas.jsonl";
    {
        const std::string stage = "05_embed";
        const auto personas = read_jsonl<Persona>(minhash_file);
        auto progress = load_progress(cfg_, stage, hash_);
        if (!(progress && progress->done)) {
            StageProgress p = progress.value_or(StageProgress{});
            p.config_hash = hash_;
            truncate_to(embed_file, p.byte_offset);
            const std::uint64_t base_offset = p.byte_offset;
            JsonlWriter writer(embed_file, p.byte_offset > 0);
            while (p.input_ordinal < personas.size()) {
                const std::size_t chunk_end =
                    std::min(personas.size(),
                             p.input_ordinal + static_cast<std::size_t>(cfg_.checkpoint_every));
                std::vector<std::string> texts;
                for (std::size_t i = p.input_ordinal; i < chunk_end; ++i) {
                    texts.push_back(personas[i].description);
                }
                const auto vectors = embedder->embed(texts);
                for (std::size_t i = p.input_ordinal; i < chunk_end; ++i) {
                    Persona withvec = personas[i];
                    withvec.embedding = vectors[i - p.input_ordinal];
                    writer.write(withvec);
                }
                writer.flush();
                p.input_ordinal = chunk_end;
                p.record_ordinal = p.input_ordinal;
                p.byte_offset = base_offset + writer.bytes_written();
                save_progress(cfg_, stage, p);
                commit_hook(stage, p.input_ordinal);
            }
            p.done = true;
            save_progress(cfg_, stage, p);
        }
        summary.stages.push_back({stage, personas.size(), count_lines(embed_file)});
    }

    // --- 06 embedding dedup ----------------------------------------------
    const fs::path embdedup_file = out / "06_dedup_embedding" / "personas.jsonl";
    {
        const std::string stage = "06_dedup_embedding";
        const auto personas = read_jsonl<Persona>(embed_file);
        auto progress = load_progress(cfg_, stage, hash_);
        if (!(progress && progress->done)) {
            const DedupResult r = dedup_embedding(personas, cfg_.dedup.embedding_threshold);
            write_jsonl(embdedup_file, r.survivors);
            write_jsonl(out / "06_dedup_embedding" / "report.jsonl", r.report.clusters);
            StageProgress p;
            p.config_hash = hash_;
            p.input_ordinal = personas.size();
            p.record_ordinal = r.survivors.size();
            p.done = true;
            save_progress(cfg_, stage, p);
            commit_hook(stage, personas.size());
        }
        summary.stages.push_back({stage, personas.size(), count_lines(embdedup_file)});
    }

    // --- 07 synthesize ------------------------------------------------------
    const fs::path items_file = out / "07_synthesize" / "items.jsonl";
    {
        const std::string stage = "07_synthesize";
        const auto personas = read_jsonl<Persona>(embdedup_file);
        auto progress = load_progress(cfg_, stage, hash_);
        if (!(progress && progress->done)) {
            StageProgress p = progress.value_or(StageProgress{});
            p.config_hash = hash_;
            truncate_to(items_file, p.byte_offset);
            const std::uint64_t base_offset = p.byte_offset;
            JsonlWriter writer(items_file, p.byte_offset > 0);

            PromptSpec spec;
            spec.mode = prompt_mode_from_string(cfg_.synth.mode);
            spec.scenario = cfg_.synth.scenario;
            spec.modifiers = cfg_.synth.modifiers;
            spec.decoding = cfg_.synth.decoding;
            spec.demos = load_demos(cfg_.synth, *backend);

            SynthesizeOptions opts;
            opts.n_per_persona = cfg_.synth.n_per_persona;
            opts.max_concurrency = concurrency;

            while (p.input_ordinal < personas.size()) {
                const std::size_t chunk_end =
                    std::min(personas.size(),
                             p.input_ordinal + static_cast<std::size_t>(cfg_.checkpoint_every));
                const std::vector<Persona> chunk(
                    personas.begin() + static_cast<std::ptrdiff_t>(p.input_ordinal),
                    personas.begin() + static_cast<std::ptrdiff_t>(chunk_end));
                const SynthesisRun r = synthesize(chunk, spec, registry, *backend, opts);
                for (const auto& item : r.items) writer.write(item);
                writer.flush();
                p.input_ordinal = chunk_end;
                p.record_ordinal += r.items.size();
                p.byte_offset = base_offset + writer.bytes_written();
                save_progress(cfg_, stage, p);
                commit_hook(stage, p.input_ordinal);
            }
            p.done = true;
            save_progress(cfg_, stage, p);
        }
        summary.stages.push_back({stage, personas.size(), count_lines(items_file)});
    }

    std::ofstream summary_out(out / "summary.json");
    const json sj = summary;
    summary_out << sj.dump(2) << '\n';
    return summary;
}

RunSummary run_pipeline(const PipelineConfig& cfg) {
    PipelineRunner runner(cfg);
    return runner.run();
}

void to_json(json& j, const StoreStats& s) {
    j = json{{"personas", s.personas},
             {"provenance_counts", s.provenance_counts},
             {"token_length_histogram", s.token_length_histogram},
             {"dropped_by_stage", s.dropped_by_stage},
             {"drop_rates", s.drop_rates}};
}

StoreStats compute_stats(const fs::path& personas_file,
                         const std::vector<fs::path>& report_files) {
    StoreStats stats;
    const auto personas = read_jsonl<Persona>(personas_file);
    stats.personas = personas.size();
    for (const auto& p : personas) {
        if (std::holds_alternative<FromText>(p.provenance)) ++stats.provenance_counts["from_text"];
        else if (std::holds_alternative<FromPersona>(p.provenance)) ++stats.provenance_counts["from_persona"];
        else ++stats.provenance_counts["manual"];

        const int tokens = count_ws_tokens(p.description);
        const int bucket = tokens == 0 ? 0 : ((tokens - 1) / 10) * 10 + 1;
        char label[32];
        std::snprintf(label, sizeof label, "%03d-%03d", bucket, bucket + 9);
        ++stats.token_length_histogram[label];
    }

    std::size_t total_dropped = 0;
    for (const auto& report : report_files) {
        for (const auto& c : read_jsonl<DedupCluster>(report)) {
            stats.dropped_by_stage[c.stage] += c.dropped_ids.size();
            total_dropped += c.dropped_ids.size();
        }
    }
    const double original = static_cast<double>(stats.personas + total_dropped);
    if (original > 0) {
        for (const auto& [stage, dropped] : stats.dropped_by_stage) {
            stats.drop_rates[stage] = static_cast<double>(dropped) / original;
        }
    }
    return stats;
}

std::vector<std::string> verify_lineage(const fs::path& out_dir, const fs::path& corpus) {
    std::vector<std::string> problems;
    const fs::path out(out_dir);

    std::unordered_set<std::string> text_ids;
    for (const auto& t : read_jsonl<SourceText>(corpus)) text_ids.insert(t.id);

    const auto nodes = read_jsonl<Persona>(out / "02_expand" / "nodes.jsonl");
    std::unordered_set<std::string> node_ids;
    for (const auto& n : nodes) node_ids.insert(n.id);

    for (const auto& n : nodes) {
        if (const auto* ft = std::get_if<FromText>(&n.provenance)) {
            if (!text_ids.count(ft->source_id)) {
                problems.push_back("persona " + n.id + " cites unknown text " + ft->source_id);
            }
        } else if (const auto* fp = std::get_if<FromPersona>(&n.provenance)) {
            if (!node_ids.count(fp->parent_id)) {
                problems.push_back("persona " + n.id + " cites unknown parent " + fp->parent_id);
            }
        }
    }
    for (const auto& e : read_jsonl<RelationEdge>(out / "02_expand" / "edges.jsonl")) {
        if (!node_ids.count(e.parent_id) || !node_ids.count(e.child_id)) {
            problems.push_back("edge cites unknown node: " + e.parent_id + " -> " + e.child_id);
        }
    }

    std::unordered_set<std::string> final_persona_ids;
    for (const auto& p : read_jsonl<Persona>(out / "06_dedup_embedding" / "personas.jsonl")) {
        final_persona_ids.insert(p.id);
        if (!node_ids.count(p.id)) {
            problems.push_back("survivor " + p.id + " missing from expand stage");
        }
    }
    for (const auto& item : read_jsonl<SynthesisItem>(out / "07_synthesize" / "items.jsonl")) {
        if (!final_persona_ids.count(item.persona_id)) {
            problems.push_back("item " + item.id + " cites unknown persona " + item.persona_id);
        }
    }
    return problems;
}

} // namespace pforge
