#pragma once
// Multi-producer solution generation for synthesized items.

#include <memory>
#include <vector>

#include "pforge/backend.hpp"
#include "pforge/text_to_persona.hpp" // SkipRecord
#include "pforge/types.hpp"

namespace pforge {

// Final-answer extraction rule: content of the last \boxed{...} if any,
// else the last number on the final non-empty line, else that whole line.
std::string extract_final_answer(const std::string& full_text);

struct ProducerConfig {
    std::shared_ptr<ChatBackend> backend;
    std::string strategy = "assistant"; // assistant | pot
    std::string label;                  // producer tag on solutions
    DecodingParams decoding{0.0, 2048, std::nullopt};
};

std::string build_solve_prompt(const SynthesisItem& item, const std::string& strategy);

struct SolveResult {
    std::vector<SynthesisItem> items;  // inputs with solutions appended
    std::vector<SkipRecord> failures;  // per-(item, producer) failures
};

// Each item gains one Solution per producer that succeeds; producer
// failures are recorded and leave that solution absent.
SolveResult solve_items(const std::vector<SynthesisItem>& items,
                        const std::vector<ProducerConfig>& producers, int max_concurrency = 1);

} // namespace pforge
