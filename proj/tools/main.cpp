// personaforge: persona-driven synthetic data pipeline CLI.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pforge/cassette.hpp"
#include "pforge/consensus.hpp"
#include "pforge/json_io.hpp"
#include "pforge/persona_to_persona.hpp"
#include "pforge/pipeline.hpp"
#include "pforge/similarity_bands.hpp"
#include "pforge/solutions.hpp"
#include "pforge/synthesizer.hpp"

namespace {

using namespace pforge;
using nlohmann::json;

struct BackendFlags {
    BackendConfig cfg;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--backend-kind", cfg.kind,
                        "mock | replay | http_openai_compatible (default mock)");
        cmd->add_option("--base-url", cfg.base_url, "OpenAI-compatible base URL, e.g. .../v1");
        cmd->add_option("--model", cfg.model_name, "model name");
        cmd->add_option("--api-key-env", cfg.api_key_env_var,
                        "name of the env var holding the API key");
        cmd->add_option("--backend-concurrency", cfg.max_concurrency, "in-flight request cap");
        cmd->add_option("--mock-fanout", cfg.mock_fanout, "personas/relations per mock reply");
        cmd->add_option("--cassette", cfg.cassette_path, "cassette file for replay backend");
        cmd->add_option("--retry-attempts", cfg.retry.max_attempts, "max attempts");
        cmd->add_option("--retry-backoff-ms", cfg.retry.backoff_base_ms, "backoff base (ms)");
        cmd->add_option("--timeout-ms", cfg.timeout_ms, "request timeout (ms)");
    }
};

struct EmbedderFlags {
    EmbeddingConfig cfg;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--embed-kind", cfg.kind, "mock | http_openai_compatible");
        cmd->add_option("--embed-model", cfg.model_name, "embedding model name");
        cmd->add_option("--dim", cfg.dim, "embedding dimension (default 512)");
        cmd->add_option("--embed-base-url", cfg.base_url, "embeddings base URL");
        cmd->add_option("--embed-api-key-env", cfg.api_key_env_var, "env var with the key");
        cmd->add_option("--embed-seed", cfg.seed, "mock projection seed");
    }
};

std::map<std::string, std::string> parse_modifiers(const std::vector<std::string>& kvs) {
    std::map<std::string, std::string> out;
    for (const auto& kv : kvs) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("--modifier expects key=value, got: " + kv);
        }
        out[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    return out;
}

void write_skips(const std::string& path, const std::vector<SkipRecord>& skips) {
    if (path.empty()) return;
    JsonlWriter w(path);
    for (const auto& s : skips) {
        w.write_line(
            json{{"subject_id", s.subject_id}, {"detail", s.detail}, {"error", s.error}}.dump());
    }
    w.flush();
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(path + " is not valid JSON: " + std::string(e.what()));
    }
    return j;
}

std::vector<ProducerConfig> load_producers(const std::string& path) {
    const json j = read_json_file(path);
    if (!j.is_array() || j.empty()) {
        throw ConfigError("producers file must be a non-empty JSON array");
    }
    std::vector<ProducerConfig> out;
    for (const auto& row : j) {
        ProducerConfig p;
        p.label = row.value("label", "");
        p.strategy = row.value("strategy", "assistant");
        p.backend = std::shared_ptr<ChatBackend>(
            make_backend(parse_backend_config(row.at("backend"), "producer.backend")));
        if (row.contains("decoding")) {
            p.decoding = parse_decoding_config(row.at("decoding"), "producer.decoding");
        }
        out.push_back(std::move(p));
    }
    return out;
}

int cmd_ingest(const std::string& corpus, const std::string& out_path, const T2PConfig& cfg,
               const BackendConfig& backend_cfg, int max_concurrency,
               const std::string& skips_path) {
    auto backend = make_backend(backend_cfg);
    const auto corpus_texts = read_jsonl<SourceText>(corpus);
    RunOptions opts;
    opts.max_concurrency = max_concurrency;
    const T2PResult result = run_text_to_persona(corpus_texts, cfg, *backend, opts);
    write_jsonl(out_path, result.personas);
    write_skips(skips_path, result.skips);
    std::cerr << "ingest: " << corpus_texts.size() << " texts -> " << result.personas.size()
              << " personas (" << result.skips.size() << " skips)\n";
    return 0;
}

int cmd_expand(const std::string& personas_path, const std::string& out_graph,
               const ExpandOptions& opts, const BackendConfig& backend_cfg,
               const std::string& skips_path) {
    auto backend = make_backend(backend_cfg);
    const auto seeds = read_jsonl<Persona>(personas_path);
    const ExpandResult result = expand_graph(seeds, opts, *backend);
    write_jsonl(out_graph + ".nodes.jsonl", result.graph.nodes);
    write_jsonl(out_graph + ".edges.jsonl", result.graph.edges);
    write_skips(skips_path, result.skips);
    std::cerr << "expand: " << seeds.size() << " seeds -> " << result.graph.nodes.size()
              << " nodes, " << result.graph.edges.size() << " edges\n";
    return 0;
}

int cmd_dedup(const std::string& personas_path, const std::string& stage, double threshold,
              double embedding_threshold, const MinHashDedupConfig& mh_base,
              const std::string& out_path, const std::string& report_path) {
    auto personas = read_jsonl<Persona>(personas_path);
    const std::size_t before = personas.size();
    std::vector<DedupCluster> clusters;

    if (stage == "minhash" || stage == "both") {
        MinHashDedupConfig mh = mh_base;
        mh.threshold = threshold;
        DedupResult r = dedup_minhash(personas, mh);
        personas = std::move(r.survivors);
        for (auto& c : r.report.clusters) clusters.push_back(std::move(c));
    }
    if (stage == "embedding" || stage == "both") {
        DedupResult r = dedup_embedding(personas, embedding_threshold);
        personas = std::move(r.survivors);
        for (auto& c : r.report.clusters) clusters.push_back(std::move(c));
    }
    if (stage != "minhash" && stage != "embedding" && stage != "both") {
        throw ConfigError("--stage must be minhash, embedding, or both");
    }

    write_jsonl(out_path, personas);
    if (!report_path.empty()) write_jsonl(report_path, clusters);
    std::cerr << "dedup(" << stage << "): " << before << " -> " << personas.size() << "\n";
    return 0;
}

int cmd_embed(const std::string& personas_path, const std::string& out_path,
              const EmbeddingConfig& cfg) {
    auto embedder = make_embedder(cfg);
    auto personas = read_jsonl<Persona>(personas_path);
    constexpr std::size_t batch = 256;
    for (std::size_t at = 0; at < personas.size(); at += batch) {
        const std::size_t end = std::min(personas.size(), at + batch);
        std::vector<std::string> texts;
        for (std::size_t i = at; i < end; ++i) texts.push_back(personas[i].description);
        const auto vectors = embedder->embed(texts);
        for (std::size_t i = at; i < end; ++i) personas[i].embedding = vectors[i - at];
    }
    write_jsonl(out_path, personas);
    std::cerr << "embed: " << personas.size() << " personas, dim " << cfg.dim << "\n";
    return 0;
}

int cmd_synthesize(const std::string& personas_path, const std::string& out_path,
                   PromptSpec spec, const std::string& templates_dir,
                   const std::string& demos_path, bool derive_personas,
                   const SynthesizeOptions& opts, const BackendConfig& backend_cfg,
                   const std::string& skips_path) {
    auto backend = make_backend(backend_cfg);
    const TemplateRegistry registry = TemplateRegistry::load_dir(templates_dir);

    if (!demos_path.empty()) {
        std::size_t line_no = 0;
        std::vector<std::string> raw_texts;
        for (const auto& line : read_lines(demos_path)) {
            ++line_no;
            if (line.empty()) continue;
            json j;
            try {
                j = json::parse(line);
            } catch (const json::exception& e) {
                throw CorruptRecord(demos_path, line_no, e.what());
            }
            Demo d;
            d.content = j.at("content").get<std::string>();
            if (j.contains("demo_persona")) d.demo_persona = j.at("demo_persona").get<Persona>();
            spec.demos.push_back(std::move(d));
        }
        if (derive_personas) {
            std::vector<std::string> texts;
            for (const auto& d : spec.demos) texts.push_back(d.content);
            spec.demos = derive_demo_personas(texts, *backend);
        }
    }

    const auto personas = read_jsonl<Persona>(personas_path);
    const SynthesisRun run = synthesize(personas, spec, registry, *backend, opts);
    write_jsonl(out_path, run.items);
    write_skips(skips_path, run.skips);
    std::cerr << "synthesize: " << personas.size() << " personas -> " << run.items.size()
              << " items (" << run.skips.size() << " skips)\n";
    return 0;
}

int cmd_solve(const std::string& items_path, const std::string& producers_path,
              const std::string& out_path, int max_concurrency,
              const std::string& failures_path) {
    const auto items = read_jsonl<SynthesisItem>(items_path);
    const auto producers = load_producers(producers_path);
    const SolveResult result = solve_items(items, producers, max_concurrency);
    write_jsonl(out_path, result.items);
    write_skips(failures_path, result.failures);
    std::cerr << "solve: " << items.size() << " items x " << producers.size() << " producers, "
              << result.failures.size() << " failures\n";
    return 0;
}

int cmd_consensus(const std::string& solutions_path, int min_agree, const std::string& out_path,
                  const std::string& judge_path) {
    const auto items = read_jsonl<SynthesisItem>(solutions_path);
    std::vector<SynthesisItem> retained;
    if (judge_path.empty()) {
        EqualityChecker eq;
        retained = consensus_filter(items, eq, min_agree);
    } else {
        auto judge = std::shared_ptr<ChatBackend>(
            make_backend(parse_backend_config(read_json_file(judge_path), "judge")));
        EqualityChecker eq(judge);
        try {
            retained = consensus_filter(items, eq, min_agree);
        } catch (const JudgeUnavailable& e) {
            // fall back to the fast path, flagged on every retained item
            std::cerr << "consensus: judge unavailable (" << e.what()
                      << "); falling back to fast path\n";
            EqualityChecker fast;
            retained = consensus_filter(items, fast, min_agree);
            for (auto& item : retained) item.meta["judge_fallback"] = "true";
        }
    }
    write_jsonl(out_path, retained);
    std::cerr << "consensus: " << items.size() << " -> " << retained.size() << " retained\n";
    return 0;
}

int cmd_simexp(const std::string& personas_path, const std::vector<double>& bands, int pairs,
               double width, std::uint64_t seed, const std::string& scenario,
               const std::map<std::string, std::string>& modifiers,
               const std::string& templates_dir, const std::string& out_path,
               const std::string& summary_path, const BackendConfig& backend_cfg,
               const EmbeddingConfig& embed_cfg) {
    auto backend = make_backend(backend_cfg);
    auto embedder = make_embedder(embed_cfg);
    const TemplateRegistry registry = TemplateRegistry::load_dir(templates_dir);
    const auto personas = read_jsonl<Persona>(personas_path);

    JsonlWriter results(out_path);
    json summary = json::object();
    for (double center : bands) {
        BandSpec band{center, width, pairs};
        const auto sampled = sample_pairs_at_band(personas, band, seed);
        const SimilarityExperimentResult r = run_similarity_experiment(
            personas, sampled, band, scenario, modifiers, registry, *backend, *embedder);
        const json rj = r;
        results.write_line(rj.dump());
        char key[32];
        std::snprintf(key, sizeof key, "%.2f", center);
        summary[key] = {{"mean", r.summary.mean},
                        {"median", r.summary.median},
                        {"p25", r.summary.p25},
                        {"p75", r.summary.p75},
                        {"pairs", r.problem_pair_sims.size()},
                        {"failures", r.failures}};
    }
    results.flush();
    if (!summary_path.empty()) {
        std::ofstream out(summary_path);
        out << summary.dump(2) << '\n';
    }
    std::cout << summary.dump(2) << '\n';
    return 0;
}

int cmd_stats(const std::string& personas_path, const std::vector<std::string>& reports,
              const std::string& lineage_dir, const std::string& corpus) {
    std::vector<std::filesystem::path> report_paths(reports.begin(), reports.end());
    const StoreStats s = compute_stats(personas_path, report_paths);
    json j = s;
    if (!lineage_dir.empty()) {
        if (corpus.empty()) throw ConfigError("--check-lineage requires --corpus");
        j["lineage_problems"] = verify_lineage(lineage_dir, corpus);
    }
    std::cout << j.dump(2) << '\n';
    return 0;
}

int cmd_run(const std::string& config_path) {
    const PipelineConfig cfg = load_pipeline_config(config_path);
    const RunSummary summary = run_pipeline(cfg);
    const json j = summary;
    std::cout << j.dump(2) << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"persona-driven synthetic data pipeline"};
    app.require_subcommand(1);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "derive personas from a corpus of texts");
    std::string in_corpus, in_out, in_skips;
    std::vector<std::string> in_relations{"read", "write"};
    std::string in_granularity = "as_specific_as_possible";
    T2PConfig t2p_cfg;
    int in_concurrency = 1;
    BackendFlags ingest_backend;
    ingest->add_option("--corpus", in_corpus, "SourceText JSONL")->required();
    ingest->add_option("--out", in_out, "personas JSONL")->required();
    ingest->add_option("--relation-words", in_relations, "relation words")->delimiter(',');
    ingest->add_option("--granularity", in_granularity, "as_specific_as_possible | coarse");
    ingest->add_option("--max-personas", t2p_cfg.max_personas_per_text, "cap per (text, word)");
    ingest->add_option("--max-text-chars", t2p_cfg.max_text_chars, "context budget (chars)");
    ingest->add_option("--max-concurrency", in_concurrency, "parallel texts");
    ingest->add_option("--skips", in_skips, "skip-record JSONL");
    ingest_backend.add_to(ingest);

    // expand
    auto* expand = app.add_subcommand("expand", "expand personas via relationships");
    std::string ex_personas, ex_out, ex_skips;
    ExpandOptions ex_opts;
    BackendFlags expand_backend;
    expand->add_option("--personas", ex_personas, "seed personas JSONL")->required();
    expand->add_option("--out-graph", ex_out, "output prefix (.nodes.jsonl/.edges.jsonl)")
        ->required();
    expand->add_option("--iterations", ex_opts.iterations, "expansion iterations (default 6)");
    expand->add_option("--fanout-cap", ex_opts.fanout_cap, "children per persona (default 5)");
    expand->add_option("--max-concurrency", ex_opts.max_concurrency, "parallel expansions");
    expand->add_option("--skips", ex_skips, "skip-record JSONL");
    expand_backend.add_to(expand);

    // dedup
    auto* dedup = app.add_subcommand("dedup", "deduplicate personas");
    std::string dd_personas, dd_stage = "minhash", dd_out, dd_report;
    double dd_threshold = 0.9, dd_embedding_threshold = 0.9;
    MinHashDedupConfig dd_mh;
    dedup->add_option("--personas", dd_personas, "personas JSONL")->required();
    dedup->add_option("--stage", dd_stage, "minhash | embedding | both");
    dedup->add_option("--threshold", dd_threshold, "similarity threshold (default 0.9)");
    dedup->add_option("--embedding-threshold", dd_embedding_threshold,
                      "cosine threshold for the embedding stage (default 0.9)");
    dedup->add_option("--k", dd_mh.k, "signature size (default 128)");
    dedup->add_option("--bands", dd_mh.bands, "LSH bands (default 16)");
    dedup->add_option("--rows", dd_mh.rows, "rows per band (default 8)");
    dedup->add_option("--seed", dd_mh.seed, "hash family seed");
    dedup->add_option("--out", dd_out, "survivors JSONL")->required();
    dedup->add_option("--report", dd_report, "cluster report JSONL");

    // embed
    auto* embed = app.add_subcommand("embed", "attach embeddings to personas");
    std::string em_personas, em_out;
    EmbedderFlags em_flags;
    embed->add_option("--personas", em_personas, "personas JSONL")->required();
    embed->add_option("--out", em_out, "personas-with-embeddings JSONL")->required();
    em_flags.add_to(embed);

    // synthesize
    auto* synth = app.add_subcommand("synthesize", "create items from personas");
    std::string sy_personas, sy_out, sy_scenario = "math", sy_mode = "zero_shot";
    std::string sy_demos, sy_templates = "templates", sy_skips;
    std::vector<std::string> sy_modifiers;
    bool sy_derive = false;
    SynthesizeOptions sy_opts;
    DecodingParams sy_decoding{1.0, 1024, 0};
    BackendFlags synth_backend;
    synth->add_option("--personas", sy_personas, "personas JSONL")->required();
    synth->add_option("--out", sy_out, "items JSONL")->required();
    synth->add_option("--scenario", sy_scenario, "scenario id (see templates/)");
    synth->add_option("--mode", sy_mode,
                      "zero_shot | few_shot | persona_enhanced_few_shot");
    synth->add_option("--modifier", sy_modifiers, "key=value template modifier")
        ->take_all();
    synth->add_option("--demos", sy_demos, "demo JSONL ({content, demo_persona?})");
    synth->add_flag("--derive-demo-personas", sy_derive,
                    "infer a persona for each demo via Text-to-Persona");
    synth->add_option("--templates", sy_templates, "scenario template directory");
    synth->add_option("--n-per-persona", sy_opts.n_per_persona, "repetitions per persona");
    synth->add_option("--max-concurrency", sy_opts.max_concurrency, "parallel requests");
    synth->add_option("--temperature", sy_decoding.temperature, "decoding temperature");
    synth->add_option("--skips", sy_skips, "skip-record JSONL");
    synth_backend.add_to(synth);

    // solve
    auto* solve = app.add_subcommand("solve", "generate solutions for items");
    std::string so_items, so_producers, so_out, so_failures;
    int so_concurrency = 1;
    solve->add_option("--items", so_items, "items JSONL")->required();
    solve->add_option("--producers", so_producers, "producers JSON config")->required();
    solve->add_option("--out", so_out, "items-with-solutions JSONL")->required();
    solve->add_option("--max-concurrency", so_concurrency, "parallel requests");
    solve->add_option("--failures", so_failures, "failure-record JSONL");

    // consensus
    auto* consensus = app.add_subcommand("consensus", "filter items by solution agreement");
    std::string co_solutions, co_out, co_judge;
    int co_min_agree = 2;
    consensus->add_option("--solutions", co_solutions, "items-with-solutions JSONL")->required();
    consensus->add_option("--min-agree", co_min_agree, "required agreeing solutions (default 2)");
    consensus->add_option("--out", co_out, "retained items JSONL")->required();
    consensus->add_option("--judge", co_judge, "judge backend JSON config");

    // simexp
    auto* simexp = app.add_subcommand("simexp", "persona-similarity band experiment");
    std::string sx_personas, sx_out, sx_summary, sx_scenario = "math", sx_templates = "templates";
    std::vector<double> sx_bands{0.4, 0.6, 0.8};
    std::vector<std::string> sx_modifiers;
    int sx_pairs = 20;
    double sx_width = 0.01;
    std::uint64_t sx_seed = 17;
    BackendFlags simexp_backend;
    EmbedderFlags simexp_embedder;
    simexp->add_option("--personas", sx_personas, "personas-with-embeddings JSONL")->required();
    simexp->add_option("--bands", sx_bands, "band centers")->delimiter(',');
    simexp->add_option("--pairs", sx_pairs, "pairs per band");
    simexp->add_option("--width", sx_width, "band half-window (default 0.01)");
    simexp->add_option("--seed", sx_seed, "sampler RNG seed");
    simexp->add_option("--scenario", sx_scenario, "scenario id");
    simexp->add_option("--modifier", sx_modifiers, "key=value template modifier")->take_all();
    simexp->add_option("--templates", sx_templates, "scenario template directory");
    simexp->add_option("--out", sx_out, "per-band results JSONL")->required();
    simexp->add_option("--summary", sx_summary, "summary JSON");
    simexp_backend.add_to(simexp);
    simexp_embedder.add_to(simexp);

    // stats
    auto* stats = app.add_subcommand("stats", "store statistics");
    std::string st_personas, st_lineage_dir, st_corpus;
    std::vector<std::string> st_reports;
    stats->add_option("--personas", st_personas, "personas JSONL")->required();
    stats->add_option("--report", st_reports, "dedup report JSONL")->take_all();
    stats->add_option("--check-lineage", st_lineage_dir, "run output dir to verify");
    stats->add_option("--corpus", st_corpus, "corpus for lineage verification");

    // run
    auto* run = app.add_subcommand("run", "run the full pipeline from a config file");
    std::string run_config;
    run->add_option("--config", run_config, "pipeline config JSON")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) {
            if (in_granularity == "coarse") {
                t2p_cfg.granularity_instruction = GranularityInstruction::coarse;
            } else if (in_granularity != "as_specific_as_possible") {
                throw ConfigError("unknown granularity: " + in_granularity);
            }
            t2p_cfg.relation_words = in_relations;
            return cmd_ingest(in_corpus, in_out, t2p_cfg, ingest_backend.cfg, in_concurrency,
                              in_skips);
        }
        if (*expand) {
            return cmd_expand(ex_personas, ex_out, ex_opts, expand_backend.cfg, ex_skips);
        }
        if (*dedup) {
            return cmd_dedup(dd_personas, dd_stage, dd_threshold, dd_embedding_threshold, dd_mh,
                             dd_out, dd_report);
        }
        if (*embed) return cmd_embed(em_personas, em_out, em_flags.cfg);
        if (*synth) {
            PromptSpec spec;
            spec.mode = prompt_mode_from_string(sy_mode);
            spec.scenario = sy_scenario;
            spec.modifiers = parse_modifiers(sy_modifiers);
            spec.decoding = sy_decoding;
            return cmd_synthesize(sy_personas, sy_out, std::move(spec), sy_templates, sy_demos,
                                  sy_derive, sy_opts, synth_backend.cfg, sy_skips);
        }
        if (*solve) return cmd_solve(so_items, so_producers, so_out, so_concurrency, so_failures);
        if (*consensus) return cmd_consensus(co_solutions, co_min_agree, co_out, co_judge);
        if (*simexp) {
            return cmd_simexp(sx_personas, sx_bands, sx_pairs, sx_width, sx_seed, sx_scenario,
                              parse_modifiers(sx_modifiers), sx_templates, sx_out, sx_summary,
                              simexp_backend.cfg, simexp_embedder.cfg);
        }
        if (*stats) return cmd_stats(st_personas, st_reports, st_lineage_dir, st_corpus);
        if (*run) return cmd_run(run_config);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::config_error);
    } catch (const BackendError& e) {
        std::cerr << "backend error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::backend_fatal);
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::data_corruption);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
