#include "pforge/types.hpp"

#include <sstream>

#include "pforge/stable_hash.hpp"

namespace pforge {

const char* to_string(Violation v) {
    switch (v) {
    case Violation::EmptyDescription: return "EmptyDescription";
    case Violation::DescriptionTooLong: return "DescriptionTooLong";
    case Violation::DepthNotPositive: return "DepthNotPositive";
    case Violation::DepthExceeded: return "DepthExceeded";
    }
    return "Unknown";
}

const char* to_string(Granularity g) {
    switch (g) {
    case Granularity::coarse: return "coarse";
    case Granularity::fine: return "fine";
    case Granularity::unspecified: return "unspecified";
    }
    return "unspecified";
}

Granularity granularity_from_string(const std::string& s) {
    if (s == "coarse") return Granularity::coarse;
    if (s == "fine") return Granularity::fine;
    if (s == "unspecified") return Granularity::unspecified;
    throw std::invalid_argument("unknown granularity: " + s);
}

const char* to_string(Scenario s) {
    switch (s) {
    case Scenario::math: return "math";
    case Scenario::math_focus: return "math_focus";
    case Scenario::math_difficulty: return "math_difficulty";
    case Scenario::logic: return "logic";
    case Scenario::ruozhiba: return "ruozhiba";
    case Scenario::instruction: return "instruction";
    case Scenario::knowledge_text: return "knowledge_text";
    case Scenario::npc: return "npc";
    case Scenario::tool_schema: return "tool_schema";
    case Scenario::tool_impl: return "tool_impl";
    }
    return "math";
}

Scenario scenario_from_string(const std::string& s) {
    if (s == "math") return Scenario::math;
    if (s == "math_focus") return Scenario::math_focus;
    if (s == "math_difficulty") return Scenario::math_difficulty;
    if (s == "logic") return Scenario::logic;
    if (s == "ruozhiba") return Scenario::ruozhiba;
    if (s == "instruction") return Scenario::instruction;
    if (s == "knowledge_text") return Scenario::knowledge_text;
    if (s == "npc") return Scenario::npc;
    if (s == "tool_schema") return Scenario::tool_schema;
    if (s == "tool_impl") return Scenario::tool_impl;
    throw std::invalid_argument("unknown scenario: " + s);
}

int count_ws_tokens(const std::string& text) {
    std::istringstream in(text);
    std::string tok;
    int n = 0;
    while (in >> tok) ++n;
    return n;
}

namespace {

bool is_blank(const std::string& s) {
    for (char c : s) {
        if (!std::isspace(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

} // namespace

std::vector<Violation> validate_persona(const Persona& p, int max_iterations) {
    std::vector<Violation> out;
    if (p.description.empty() || is_blank(p.description)) {
        out.push_back(Violation::EmptyDescription);
    } else if (count_ws_tokens(p.description) > kMaxDescriptionTokens) {
        out.push_back(Violation::DescriptionTooLong);
    }
    if (const auto* fp = std::get_if<FromPersona>(&p.provenance)) {
        if (fp->depth < 1) out.push_back(Violation::DepthNotPositive);
        else if (fp->depth > max_iterations) out.push_back(Violation::DepthExceeded);
    }
    return out;
}

namespace {

std::string provenance_key(const Provenance& prov) {
    if (const auto* ft = std::get_if<FromText>(&prov)) {
        return "from_text\x1f" + ft->source_id + "\x1f" + ft->relation_word;
    }
    if (const auto* fp = std::get_if<FromPersona>(&prov)) {
        return "from_persona\x1f" + fp->parent_id + "\x1f" + fp->relation_label + "\x1f" +
               std::to_string(fp->depth);
    }
    return "manual";
}

} // namespace

std::string persona_id_for(const std::string& description, const Provenance& prov) {
    const std::string key = description + "\x1e" + provenance_key(prov);
    return "p" + to_hex16(stable_hash64(key));
}

std::string item_id_for(Scenario scenario, const std::string& persona_id,
                        const std::string& prompt_text, int repetition) {
    std::string key = std::string(to_string(scenario)) + "\x1e" + persona_id + "\x1e" +
                      prompt_text + "\x1e" + std::to_string(repetition);
    return "s" + to_hex16(stable_hash64(key));
}

} // namespace pforge
