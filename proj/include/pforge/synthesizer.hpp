#pragma once
// Persona-driven synthesis: render prompts under the three prompting
// modes and drive scenario generation through a backend.

#include <vector>

#include "pforge/prompt_spec.hpp"
#include "pforge/template_registry.hpp"
#include "pforge/text_to_persona.hpp"

namespace pforge {

// zero_shot: instruction with the persona; few_shot: demos then the
// instruction; persona-enhanced: (demo persona, demo) pairs then the
// instruction with the target persona left to complete.
std::string render_prompt(const PromptSpec& spec, const TemplateRegistry& registry);

struct SynthesizeOptions {
    int n_per_persona = 1;
    int max_concurrency = 1;
};

struct SynthesisRun {
    std::vector<SynthesisItem> items;
    std::vector<SkipRecord> skips;
};

// One item per (persona, repetition); ids are content-derived so reruns
// are stable. Per-item failures are skipped and recorded.
SynthesisRun synthesize(const std::vector<Persona>& personas, const PromptSpec& spec_template,
                        const TemplateRegistry& registry, ChatBackend& backend,
                        const SynthesizeOptions& opts = {});

// Pairs each demonstration text with a persona inferred through the
// Text-to-Persona prompt. Demos whose inference fails are dropped.
std::vector<Demo> derive_demo_personas(const std::vector<std::string>& demo_texts,
                                       ChatBackend& backend,
                                       const DecodingParams& decoding = {1.0, 1024, std::nullopt});

// tool_schema item -> tool_impl item whose meta links back to the schema.
SynthesisItem convert_tool_schema_to_impl(const SynthesisItem& schema_item, const Persona& persona,
                                          const TemplateRegistry& registry, ChatBackend& backend,
                                          const DecodingParams& decoding = {1.0, 1024, std::nullopt});

// The SynthesisItem scenario tag for a scenario id plus modifiers
// (math with a focus modifier tags as math_focus, etc.).
Scenario item_scenario_for(const std::string& scenario_id,
                           const std::map<std::string, std::string>& modifiers);

} // namespace pforge
