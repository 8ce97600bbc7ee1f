#pragma once
// Text-to-Persona: infer who would read/write/like/dislike a text by
// prompting the backend, one call per (text, relation word).

#include <vector>

#include "pforge/prompt_spec.hpp"
#include "pforge/types.hpp"

namespace pforge {

enum class GranularityInstruction { as_specific_as_possible, coarse };

struct T2PConfig {
    std::vector<std::string> relation_words = {"read", "write"};
    GranularityInstruction granularity_instruction = GranularityInstruction::as_specific_as_possible;
    int max_personas_per_text = 3;
    // Context budget in characters; longer texts are truncated by the
    // runner before prompting (persona inference only needs a sample).
    int max_text_chars = 4000;
};

void validate(const T2PConfig& cfg); // throws ConfigError

// One question per relation word in cfg. Throws TextTooLong when the text
// exceeds the context budget; the runner truncates and retries.
PromptSpec build_t2p_prompt(const SourceText& text, const T2PConfig& cfg);

// Strips surrounding markdown fences, parses a JSON array of description
// strings, caps at max_personas_per_text. Personas get
// from_text(text_id, relation_word) provenance with the first entry of
// cfg.relation_words; the runner narrows cfg to a single word per call.
std::vector<Persona> parse_persona_response(const std::string& raw, const std::string& text_id,
                                            const T2PConfig& cfg);

struct SkipRecord {
    std::string subject_id; // text or persona id
    std::string detail;     // relation word, producer, ...
    std::string error;
};

struct T2PResult {
    std::vector<Persona> personas;
    std::vector<SkipRecord> skips;
};

struct RunOptions {
    int max_concurrency = 1;
    DecodingParams decoding{1.0, 1024, std::nullopt};
};

// Per-text failures are skipped and recorded; only hard backend errors
// (auth, exhausted retries) abort the run.
T2PResult run_text_to_persona(const std::vector<SourceText>& corpus, const T2PConfig& cfg,
                              ChatBackend& backend, const RunOptions& opts = {});

// UTF-8-safe prefix truncation helper used by the runner.
std::string truncate_utf8(const std::string& text, std::size_t max_chars);

} // namespace pforge
