#pragma once
// Consensus test-set filtering: keep an item only when enough producers
// agree on the final answer.

#include <string>
#include <vector>

#include "pforge/answer_equality.hpp"
#include "pforge/types.hpp"

namespace pforge {

struct ConsensusDecision {
    bool retained = false;
    std::string reference_answer;   // representative of the winning class
    std::string reference_producer; // its producer label
    int agreeing = 0;               // size of the winning class
};

// Groups solutions into answer-equivalence classes with the checker. The
// item is retained iff exactly one class of maximal size has >= min_agree
// members (equal-size ties drop the item). The representative is the
// class member with the lexicographically smallest producer label, which
// makes the decision invariant to solution order.
ConsensusDecision consensus_decide(const std::vector<Solution>& solutions, EqualityChecker& eq,
                                   int min_agree = 2);

// Retained items get meta["reference_answer"] / ["reference_producer"].
std::vector<SynthesisItem> consensus_filter(const std::vector<SynthesisItem>& items,
                                            EqualityChecker& eq, int min_agree = 2);

} // namespace pforge
