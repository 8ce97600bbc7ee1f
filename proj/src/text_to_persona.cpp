#include "pforge/text_to_persona.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include <json.hpp>

#include "pforge/errors.hpp"

namespace pforge {

using nlohmann::json;

void validate(const T2PConfig& cfg) {
    if (cfg.relation_words.empty()) throw ConfigError("relation_words must be non-empty");
    if (cfg.max_personas_per_text < 1) throw ConfigError("max_personas_per_text must be >= 1");
    if (cfg.max_text_chars < 1) throw ConfigError("max_text_chars must be >= 1");
}

namespace {

const char* granularity_line(GranularityInstruction g) {
    switch (g) {
    case GranularityInstruction::as_specific_as_possible:
        return "Output persona descriptions as specifically as possible.";
    case GranularityInstruction::coarse:
        return "Output coarse-grained persona descriptions.";
    }
    return "";
}

// Strip one surrounding ``` fence (optionally ```json) if present.
std::string strip_fences(const std::string& raw) {
    const auto first = raw.find("```");
    if (first == std::string::npos) return raw;
    auto begin = raw.find('\n', first);
    if (begin == std::string::npos) return raw;
    ++begin;
    const auto last = raw.rfind("```");
    if (last <= begin) return raw;
    return raw.substr(begin, last - begin);
}

} // namespace

std::string truncate_utf8(const std::string& text, std::size_t max_chars) {
    if (text.size() <= max_chars) return text;
    std::size_t end = max_chars;
    // back up over a split multi-byte sequence
    while (end > 0 && (static_cast<unsigned char>(text[end]) & 0xC0u) == 0x80u) --end;
    return text.substr(0, end);
}

PromptSpec build_t2p_prompt(const SourceText& text, const T2PConfig& cfg) {
    validate(cfg);
    if (static_cast<int>(text.text.size()) > cfg.max_text_chars) {
        throw TextTooLong("text " + text.id + " exceeds context budget (" +
                          std::to_string(text.text.size()) + " > " +
                          std::to_string(cfg.max_text_chars) + " chars)");
    }

    std::string prompt = "Read the text below, then answer the question about it.\n\nText:\n<<<\n" +
                         text.text + "\n>>>\n\n";
    for (const auto& rw : cfg.relation_words) {
        prompt += "Question: Who is likely to " + rw + " this text?\n";
    }
    prompt += "Describe at most " + std::to_string(cfg.max_personas_per_text) +
              " personas per question, each in one or two sentences.\n";
    prompt += granularity_line(cfg.granularity_instruction);
    prompt += "\nRespond with only a JSON array of persona description strings.";

    PromptSpec spec;
    spec.mode = PromptMode::zero_shot;
    spec.scenario = "text_to_persona";
    spec.rendered = std::move(prompt);
    return spec;
}

std::vector<Persona> parse_persona_response(const std::string& raw, const std::string& text_id,
                                            const T2PConfig& cfg) {
    json arr;
    try {
        arr = json::parse(strip_fences(raw));
    } catch (const json::exception& e) {
        throw MalformedResponse(std::string("persona response is not JSON: ") + e.what());
    }
    if (!arr.is_array()) throw MalformedResponse("persona response is not a JSON array");

    const std::string relation_word =
        cfg.relation_words.empty() ? "" : cfg.relation_words.front();
    const Granularity gran =
        cfg.granularity_instruction == GranularityInstruction::coarse ? Granularity::coarse
                                                                      : Granularity::fine;
    std::vector<Persona> out;
    for (const auto& el : arr) {
        if (static_cast<int>(out.size()) >= cfg.max_personas_per_text) break;
        if (!el.is_string()) throw MalformedResponse("persona array element is not a string");
        std::string desc = el.get<std::string>();
        while (!desc.empty() && std::isspace(static_cast<unsigned char>(desc.back()))) desc.pop_back();
        while (!desc.empty() && std::isspace(static_cast<unsigned char>(desc.front()))) desc.erase(desc.begin());
        if (desc.empty()) continue;
        Persona p;
        p.description = std::move(desc);
        p.granularity = gran;
        p.provenance = FromText{text_id, relation_word};
        p.id = persona_id_for(p.description, p.provenance);
        out.push_back(std::move(p));
    }
    return out;
}

namespace {

struct T2PTask {
    const SourceText* text;
    std::string relation_word;
};

struct T2PTaskResult {
    std::vector<Persona> personas;
    std::optional<SkipRecord> skip;
};

T2PTaskResult run_one(const T2PTask& task, const T2PConfig& cfg, ChatBackend& backend,
                      const DecodingParams& decoding) {
    T2PConfig narrowed = cfg;
    narrowed.relation_words = {task.relation_word};

    SourceText text = *task.text;
    text.text = truncate_utf8(text.text, static_cast<std::size_t>(cfg.max_text_chars));

    T2PTaskResult result;
    try {
        const PromptSpec spec = build_t2p_prompt(text, narrowed);
        for (int attempt = 0;; ++attempt) {
            const Completion c = backend.complete(spec.rendered, decoding);
            try {
                result.personas = parse_persona_response(c.text, text.id, narrowed);
                break;
            } catch (const MalformedResponse&) {
                if (attempt >= 1) throw; // one retry, then skip
            }
        }
    } catch (const AuthError&) {
        throw;
    } catch (const RateLimitedExhausted&) {
        throw;
    } catch (const Error& e) {
        result.skip = SkipRecord{task.text->id, task.relation_word, e.what()};
    }
    return result;
}

} // namespace

T2PResult run_text_to_persona(const std::vector<SourceText>& corpus, const T2PConfig& cfg,
                              ChatBackend& backend, const RunOptions& opts) {
    validate(cfg);

    std::vector<T2PTask> tasks;
    for (const auto& text : corpus) {
        for (const auto& rw : cfg.relation_words) {
            tasks.push_back({&text, rw});
        }
    }

    std::vector<T2PTaskResult> results(tasks.size());
    const int workers = std::max(1, std::min<int>(opts.max_concurrency,
                                                  static_cast<int>(tasks.size())));
    if (workers == 1) {
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            results[i] = run_one(tasks[i], cfg, backend, opts.decoding);
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
                        results[i] = run_one(tasks[i], cfg, backend, opts.decoding);
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

    T2PResult out;
    for (auto& r : results) {
        for (auto& p : r.personas) out.personas.push_back(std::move(p));
        if (r.skip) out.skips.push_back(std::move(*r.skip));
    }
    return out;
}

} // namespace pforge
