#include "pforge/consensus.hpp"

#include <algorithm>

namespace pforge {

ConsensusDecision consensus_decide(const std::vector<Solution>& solutions, EqualityChecker& eq,
                                   int min_agree) {
    ConsensusDecision out;
    if (solutions.empty()) return out;

    // Equivalence classes by pairwise answer equality (first member is
    // the class anchor).
    std::vector<std::vector<std::size_t>> classes;
    for (std::size_t i = 0; i < solutions.size(); ++i) {
        bool placed = false;
        for (auto& cls : classes) {
            if (eq.equal(solutions[cls.front()].answer, solutions[i].answer)) {
                cls.push_back(i);
                placed = true;
                break;
            }
        }
        if (!placed) classes.push_back({i});
    }

    std::size_t best = 0;
    bool tie = false;
    for (std::size_t c = 1; c < classes.size(); ++c) {
        if (classes[c].size() > classes[best].size()) {
            best = c;
            tie = false;
        } else if (classes[c].size() == classes[best].size()) {
            tie = true;
        }
    }

    const int best_size = static_cast<int>(classes[best].size());
    if (best_size < min_agree || (tie && classes.size() > 1)) {
        out.agreeing = best_size;
        return out;
    }

    // Order-invariant representative: smallest producer label, then
    // smallest answer string.
    std::size_t rep = classes[best].front();
    for (std::size_t idx : classes[best]) {
        const auto& cand = solutions[idx];
        const auto& cur = solutions[rep];
        if (cand.producer < cur.producer ||
            (cand.producer == cur.producer && cand.answer < cur.answer)) {
            rep = idx;
        }
    }

    out.retained = true;
    out.agreeing = best_size;
    out.reference_answer = solutions[rep].answer;
    out.reference_producer = solutions[rep].producer;
    return out;
}

std::vector<SynthesisItem> consensus_filter(const std::vector<SynthesisItem>& items,
                                            EqualityChecker& eq, int min_agree) {
    std::vector<SynthesisItem> retained;
    for (const auto& item : items) {
        const ConsensusDecision d = consensus_decide(item.solutions, eq, min_agree);
        if (!d.retained) continue;
        SynthesisItem kept = item;
        kept.meta["reference_answer"] = d.reference_answer;
        kept.meta["reference_producer"] = d.reference_producer;
        kept.meta["consensus_size"] = std::to_string(d.agreeing);
        retained.push_back(std::move(kept));
    }
    return retained;
}

} // namespace pforge
