#pragma once
// Persona-to-Persona: derive interpersonally related personas, iterated
// to a fixed depth (default six iterations).

#include <vector>

#include "pforge/prompt_spec.hpp"
#include "pforge/text_to_persona.hpp" // SkipRecord
#include "pforge/types.hpp"

namespace pforge {

PromptSpec build_p2p_prompt(const Persona& p);

struct ParsedRelations {
    std::vector<Persona> children;
    std::vector<RelationEdge> edges; // parallel to children
};

// Children get from_persona(parent.id, relation_label, iteration)
// provenance. Throws MalformedResponse on bad JSON or missing keys.
ParsedRelations parse_relations(const std::string& raw, const Persona& parent, int iteration);

struct ExpandOptions {
    int iterations = kDefaultMaxIterations; // six per the expansion scheme
    int fanout_cap = 5;
    int max_concurrency = 1;
    DecodingParams decoding{1.0, 1024, std::nullopt};
};

struct ExpandResult {
    PersonaGraph graph;
    std::vector<SkipRecord> skips;
};

// Breadth-first expansion: seeds are iteration 0, every persona of the
// frontier is expanded once per iteration, children capped at fanout_cap.
// Exact-duplicate descriptions collapse onto the first node that carried
// them; collapsed children are never re-expanded.
ExpandResult expand_graph(const std::vector<Persona>& seeds, const ExpandOptions& opts,
                          ChatBackend& backend);

// Graph invariant checks used by tests and the stats command: edge
// endpoints resolve, from_persona edges are acyclic, iterations bounded.
std::vector<std::string> check_graph(const PersonaGraph& g, int max_iterations = kDefaultMaxIterations);

} // namespace pforge
