#include "pforge/minhash.hpp"

#include <algorithm>
#include <cmath>

#include "pforge/errors.hpp"
#include "pforge/stable_hash.hpp"

namespace pforge {

namespace {

// Decode one UTF-8 codepoint starting at i; advances i past it.
// Malformed bytes are passed through as single codepoints.
std::uint32_t next_codepoint(const std::string& s, std::size_t& i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    std::uint32_t cp = b0;
    if ((b0 & 0x80u) == 0) {
        len = 1;
    } else if ((b0 & 0xE0u) == 0xC0u) {
        len = 2;
        cp = b0 & 0x1Fu;
    } else if ((b0 & 0xF0u) == 0xE0u) {
        len = 3;
        cp = b0 & 0x0Fu;
    } else if ((b0 & 0xF8u) == 0xF0u) {
        len = 4;
        cp = b0 & 0x07u;
    } else {
        ++i;
        return b0;
    }
    if (i + len > s.size()) {
        ++i;
        return b0;
    }
    for (std::size_t k = 1; k < len; ++k) {
        const auto bk = static_cast<unsigned char>(s[i + k]);
        if ((bk & 0xC0u) != 0x80u) {
            ++i;
            return b0;
        }
        cp = (cp << 6) | (bk & 0x3Fu);
    }
    i += len;
    return cp;
}

bool is_unicode_space(std::uint32_t cp) {
    switch (cp) {
    case 0x0085: case 0x00A0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
        return true;
    default:
        return cp >= 0x2000 && cp <= 0x200B;
    }
}

bool is_word_codepoint(std::uint32_t cp) {
    if (cp < 0x80) {
        return std::isalnum(static_cast<int>(cp)) != 0;
    }
    if (is_unicode_space(cp)) return false;
    // General punctuation, CJK symbols/punctuation, fullwidth punctuation.
    if (cp >= 0x2010 && cp <= 0x205E) return false;
    if (cp >= 0x3001 && cp <= 0x303F) return false;
    if ((cp >= 0xFF01 && cp <= 0xFF0F) || (cp >= 0xFF1A && cp <= 0xFF20) ||
        (cp >= 0xFF3B && cp <= 0xFF40) || (cp >= 0xFF5B && cp <= 0xFF65)) {
        return false;
    }
    return true;
}

void append_codepoint_lower(std::string& out, const std::string& src, std::size_t from,
                            std::size_t to, std::uint32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(std::tolower(static_cast<int>(cp))));
    } else {
        out.append(src, from, to - from);
    }
}

} // namespace

std::vector<std::string> tokenize_words(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    std::size_t i = 0;
    while (i < text.size()) {
        const std::size_t start = i;
        const std::uint32_t cp = next_codepoint(text, i);
        if (is_word_codepoint(cp)) {
            append_codepoint_lower(current, text, start, i, cp);
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::vector<std::string> tokenize_unigrams(const std::string& text) {
    auto tokens = tokenize_words(text);
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    return tokens;
}

MinHashSignature minhash_signature(const std::vector<std::string>& tokens, int k,
                                   std::uint64_t seed) {
    if (k < 1) throw std::invalid_argument("minhash k must be >= 1");
    MinHashSignature sig;
    sig.k = k;
    sig.seed = seed;
    sig.values.assign(static_cast<std::size_t>(k), kEmptySetSentinel);
    for (const auto& tok : tokens) {
        for (int lane = 0; lane < k; ++lane) {
            const std::uint64_t h = stable_hash64(tok, seed ^ static_cast<std::uint64_t>(lane));
            auto& slot = sig.values[static_cast<std::size_t>(lane)];
            slot = std::min(slot, h);
        }
    }
    return sig;
}

double exact_jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.empty() && b.empty()) return 1.0;
    std::size_t inter = 0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const int cmp = a[i].compare(b[j]);
        if (cmp == 0) {
            ++inter;
            ++i;
            ++j;
        } else if (cmp < 0) {
            ++i;
        } else {
            ++j;
        }
    }
    const std::size_t uni = a.size() + b.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double estimate_jaccard(const MinHashSignature& s1, const MinHashSignature& s2) {
    if (s1.k != s2.k || s1.seed != s2.seed ||
        s1.values.size() != static_cast<std::size_t>(s1.k) ||
        s2.values.size() != static_cast<std::size_t>(s2.k)) {
        throw IncompatibleSignatures("signatures differ in k or seed");
    }
    std::size_t agree = 0;
    for (std::size_t i = 0; i < s1.values.size(); ++i) {
        if (s1.values[i] == s2.values[i]) ++agree;
    }
    return static_cast<double>(agree) / static_cast<double>(s1.k);
}

double candidate_probability(double jaccard, int bands, int rows) {
    return 1.0 - std::pow(1.0 - std::pow(jaccard, rows), bands);
}

} // namespace pforge
