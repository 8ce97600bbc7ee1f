#pragma once
// Shared fixtures for unit and acceptance tests: constructed token-set
// pairs with exact Jaccard similarity, and synthetic persona corpora.

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "pforge/types.hpp"

namespace testsupport {

// Disjoint token namespaces per tag; exact Jaccard = tenths/10 by
// construction (shared / union = tenths*scale / 10*scale).
inline std::pair<std::vector<std::string>, std::vector<std::string>>
make_pair_with_jaccard(int tenths, int scale, const std::string& tag) {
    const int shared = tenths * scale;
    const int uni = 10 * scale;
    const int extra = uni - shared;
    const int a_only = extra / 2;
    const int b_only = extra - a_only;

    std::vector<std::string> a, b;
    for (int i = 0; i < shared; ++i) {
        a.push_back("s" + std::to_string(i) + "-" + tag);
        b.push_back("s" + std::to_string(i) + "-" + tag);
    }
    for (int i = 0; i < a_only; ++i) a.push_back("a" + std::to_string(i) + "-" + tag);
    for (int i = 0; i < b_only; ++i) b.push_back("b" + std::to_string(i) + "-" + tag);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return {a, b};
}

// A synthetic persona whose description is built from an explicit token
// list (tokens survive word tokenization unchanged).
inline pforge::Persona persona_from_tokens(const std::vector<std::string>& tokens,
                                           const std::string& id_hint) {
    pforge::Persona p;
    for (const auto& t : tokens) {
        if (!p.description.empty()) p.description += ' ';
        p.description += t;
    }
    p.provenance = pforge::Manual{};
    p.id = id_hint.empty() ? pforge::persona_id_for(p.description, p.provenance) : id_hint;
    return p;
}

} // namespace testsupport
