#pragma once
// Core domain types shared by every pipeline stage.
// All of these are immutable value types; workers copy them freely.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace pforge {

// One input record of a corpus file.
struct SourceText {
    std::string id;
    std::string text;
    std::string source_tag;
    std::string lang = "en";

    bool operator==(const SourceText&) const = default;
};

enum class Granularity { coarse, fine, unspecified };

// Where a persona came from.
struct FromText {
    std::string source_id;
    std::string relation_word; // read, write, like, ...
    bool operator==(const FromText&) const = default;
};
struct FromPersona {
    std::string parent_id;
    std::string relation_label; // e.g. "patient-caregiver relationship"
    int depth = 1;              // expansion iteration that produced it
    bool operator==(const FromPersona&) const = default;
};
struct Manual {
    bool operator==(const Manual&) const = default;
};
using Provenance = std::variant<FromText, FromPersona, Manual>;

// Fixed-length sketch of a token set; positionwise agreement rate
// estimates Jaccard similarity. Comparable only for equal k and seed.
struct MinHashSignature {
    std::vector<std::uint64_t> values;
    int k = 128;
    std::uint64_t seed = 0;

    bool operator==(const MinHashSignature&) const = default;
};

struct Persona {
    std::string id;
    std::string description; // target: 1-2 sentences
    Granularity granularity = Granularity::unspecified;
    Provenance provenance = Manual{};
    std::optional<std::vector<float>> embedding;
    std::optional<MinHashSignature> signature;

    bool operator==(const Persona&) const = default;
};

struct RelationEdge {
    std::string parent_id;
    std::string child_id;
    std::string relation_label;
    int iteration = 1;

    bool operator==(const RelationEdge&) const = default;
};

struct PersonaGraph {
    std::vector<Persona> nodes;
    std::vector<RelationEdge> edges;

    bool operator==(const PersonaGraph&) const = default;
};

enum class Scenario {
    math,
    math_focus,
    math_difficulty,
    logic,
    ruozhiba,
    instruction,
    knowledge_text,
    npc,
    tool_schema,
    tool_impl,
};

struct Solution {
    std::string producer;  // backend+strategy label, e.g. "gpt-4o-pot"
    std::string answer;    // extracted final answer
    std::string full_text; // raw solution text
    bool operator==(const Solution&) const = default;
};

// One generated artifact with persona lineage.
struct SynthesisItem {
    std::string id;
    Scenario scenario = Scenario::math;
    std::string persona_id;
    std::string prompt_text;
    std::string output_text;
    std::vector<Solution> solutions;
    std::map<std::string, std::string> meta;

    bool operator==(const SynthesisItem&) const = default;
};

// --- validation ------------------------------------------------------------

enum class Violation {
    EmptyDescription,
    DescriptionTooLong, // > 150 whitespace-delimited tokens
    DepthNotPositive,
    DepthExceeded,
};

const char* to_string(Violation v);
const char* to_string(Granularity g);
const char* to_string(Scenario s);
Granularity granularity_from_string(const std::string& s);
Scenario scenario_from_string(const std::string& s);

inline constexpr int kMaxDescriptionTokens = 150;
inline constexpr int kDefaultMaxIterations = 6;

// Total and deterministic; empty result means all invariants hold.
std::vector<Violation> validate_persona(const Persona& p,
                                        int max_iterations = kDefaultMaxIterations);

// Content-derived ids: stable hash of description + provenance so
// re-runs are idempotent.
std::string persona_id_for(const std::string& description, const Provenance& prov);
std::string item_id_for(Scenario scenario, const std::string& persona_id,
                        const std::string& prompt_text, int repetition);

// Whitespace-delimited token count (validation and quality filtering).
int count_ws_tokens(const std::string& text);

} // namespace pforge
