#include "pforge/synthesizer.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <thread>

#include "pforge/errors.hpp"

namespace pforge {

const char* to_string(PromptMode m) {
    switch (m) {
    case PromptMode::zero_shot: return "zero_shot";
    case PromptMode::few_shot: return "few_shot";
    case PromptMode::persona_enhanced_few_shot: return "persona_enhanced_few_shot";
    }
    return "zero_shot";
}

PromptMode prompt_mode_from_string(const std::string& s) {
    if (s == "zero_shot") return PromptMode::zero_shot;
    if (s == "few_shot") return PromptMode::few_shot;
    if (s == "persona_enhanced_few_shot") return PromptMode::persona_enhanced_few_shot;
    throw ConfigError("unknown prompt mode: " + s);
}

void validate_prompt_spec(const PromptSpec& spec) {
    if (spec.mode == PromptMode::zero_shot && !spec.demos.empty()) {
        throw std::invalid_argument("zero_shot spec must not carry demos");
    }
    if (spec.mode != PromptMode::zero_shot && spec.demos.empty()) {
        throw std::invalid_argument("few-shot spec requires demos");
    }
    for (const auto& d : spec.demos) {
        if (d.content.empty()) throw std::invalid_argument("demo content must be non-empty");
    }
    if (spec.mode == PromptMode::persona_enhanced_few_shot) {
        for (const auto& d : spec.demos) {
            if (!d.demo_persona) {
                throw DemoPersonaMissing("persona-enhanced demo lacks a demo persona");
            }
        }
    }
    if (spec.decoding.temperature < 0) {
        throw std::invalid_argument("temperature must be >= 0");
    }
}

std::string render_prompt(const PromptSpec& spec, const TemplateRegistry& registry) {
    validate_prompt_spec(spec);
    const ScenarioTemplate& tmpl = registry.get(spec.scenario);
    if (!spec.persona) throw std::invalid_argument("scenario prompt requires a persona");

    std::map<std::string, std::string> slots = spec.modifiers;
    slots["persona"] = spec.persona->description;
    const std::string instruction = render_template(tmpl.body, slots);

    if (spec.mode == PromptMode::zero_shot) return instruction;

    std::string out;
    if (spec.mode == PromptMode::few_shot) {
        out += "Here are some examples:\n\n";
        for (std::size_t i = 0; i < spec.demos.size(); ++i) {
            out += "Example " + std::to_string(i + 1) + ":\n" + spec.demos[i].content + "\n\n";
        }
    } else {
        out += "Here are some examples, each created with the persona shown above it:\n\n";
        for (std::size_t i = 0; i < spec.demos.size(); ++i) {
            out += "Example " + std::to_string(i + 1) + ":\nPersona: " +
                   spec.demos[i].demo_persona->description + "\n" + spec.demos[i].content + "\n\n";
        }
    }
    out += instruction;
    return out;
}

Scenario item_scenario_for(const std::string& scenario_id,
                           const std::map<std::string, std::string>& modifiers) {
    if (scenario_id == "math") {
        if (modifiers.count("focus")) return Scenario::math_focus;
        if (modifiers.count("difficulty")) return Scenario::math_difficulty;
        return Scenario::math;
    }
    return scenario_from_string(scenario_id);
}

namespace {

struct SynthTask {
    const Persona* persona;
    int repetition;
};

struct SynthTaskResult {
    std::optional<SynthesisItem> item;
    std::optional<SkipRecord> skip;
};

SynthTaskResult synthesize_one(const SynthTask& task, const PromptSpec& spec_template,
                               const TemplateRegistry& registry, ChatBackend& backend) {
    SynthTaskResult r;
    PromptSpec spec = spec_template;
    spec.persona = *task.persona;
    if (spec.decoding.seed) *spec.decoding.seed += task.repetition;

    try {
        const std::string prompt = render_prompt(spec, registry);
        const Completion c = backend.complete(prompt, spec.decoding);

        SynthesisItem item;
        item.scenario = item_scenario_for(spec.scenario, spec.modifiers);
        item.persona_id = task.persona->id;
        item.prompt_text = prompt;
        item.output_text = c.text;
        item.id = item_id_for(item.scenario, item.persona_id, prompt, task.repetition);
        item.meta["mode"] = to_string(spec.mode);
        item.meta["producer"] = c.producer;
        item.meta["repetition"] = std::to_string(task.repetition);
        for (const auto& [k, v] : spec.modifiers) item.meta["modifier." + k] = v;
        r.item = std::move(item);
    } catch (const AuthError&) {
        throw;
    } catch (const RateLimitedExhausted&) {
        throw;
    } catch (const Error& e) {
        r.skip = SkipRecord{task.persona->id, "repetition " + std::to_string(task.repetition),
                            e.what()};
    }
    return r;
}

} // namespace

SynthesisRun synthesize(const std::vector<Persona>& personas, const PromptSpec& spec_template,
                        const TemplateRegistry& registry, ChatBackend& backend,
                        const SynthesizeOptions& opts) {
    if (opts.n_per_persona < 1) throw ConfigError("n_per_persona must be >= 1");

    std::vector<SynthTask> tasks;
    for (const auto& p : personas) {
        for (int rep = 0; rep < opts.n_per_persona; ++rep) tasks.push_back({&p, rep});
    }

    std::vector<SynthTaskResult> results(tasks.size());
    const int workers =
        std::max(1, std::min<int>(opts.max_concurrency, static_cast<int>(tasks.size())));
    if (workers == 1) {
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            results[i] = synthesize_one(tasks[i], spec_template, registry, backend);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::atomic<bool> failed{false};
        std::exception_ptr first_error;
        std::mutex error_mu;
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                while (!failed.load()) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= tasks.size()) break;
                    try {
                        results[i] = synthesize_one(tasks[i], spec_template, registry, backend);
                    } catch (...) {
                        std::lock_guard lk(error_mu);
                        if (!first_error) first_error = std::current_exception();
                        failed.store(true);
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    SynthesisRun run;
    for (auto& r : results) {
        if (r.item) run.items.push_back(std::move(*r.item));
        if (r.skip) run.skips.push_back(std::move(*r.skip));
    }
    return run;
}

std::vector<Demo> derive_demo_personas(const std::vector<std::string>& demo_texts,
                                       ChatBackend& backend, const DecodingParams& decoding) {
    if (demo_texts.empty()) throw std::invalid_argument("demo list must be non-empty");

    T2PConfig cfg;
    cfg.relation_words = {"write"}; // the demo's author is the persona we want
    cfg.max_personas_per_text = 1;

    std::vector<Demo> out;
    for (std::size_t i = 0; i < demo_texts.size(); ++i) {
        SourceText text;
        text.id = "demo-" + std::to_string(i);
        text.text = truncate_utf8(demo_texts[i], static_cast<std::size_t>(cfg.max_text_chars));
        try {
            const PromptSpec spec = build_t2p_prompt(text, cfg);
            const Completion c = backend.complete(spec.rendered, decoding);
            auto personas = parse_persona_response(c.text, text.id, cfg);
            if (personas.empty()) continue; // dropped
            out.push_back(Demo{demo_texts[i], std::move(personas.front())});
        } catch (const MalformedResponse&) {
            continue; // dropped
        }
    }
    return out;
}

SynthesisItem convert_tool_schema_to_impl(const SynthesisItem& schema_item, const Persona& persona,
                                          const TemplateRegistry& registry, ChatBackend& backend,
                                          const DecodingParams& decoding) {
    if (schema_item.scenario != Scenario::tool_schema) {
        throw std::invalid_argument("convert_tool_schema_to_impl requires a tool_schema item");
    }

    PromptSpec spec;
    spec.mode = PromptMode::zero_shot;
    spec.scenario = "tool_impl";
    spec.persona = persona;
    spec.modifiers["tool_schema"] = schema_item.output_text;
    spec.decoding = decoding;

    const std::string prompt = render_prompt(spec, registry);
    const Completion c = backend.complete(prompt, spec.decoding);

    SynthesisItem item;
    item.scenario = Scenario::tool_impl;
    item.persona_id = schema_item.persona_id;
    item.prompt_text = prompt;
    item.output_text = c.text;
    item.id = item_id_for(item.scenario, item.persona_id, prompt, 0);
    item.meta["schema_item_id"] = schema_item.id;
    item.meta["producer"] = c.producer;
    return item;
}

} // namespace pforge
