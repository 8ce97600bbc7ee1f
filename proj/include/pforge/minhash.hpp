#pragma once
// Word-unigram MinHash sketching.
//
// A signature holds k lane minima; lane i applies the stable 64-bit hash
// with seed ⊕ i to every token. The fraction of agreeing lanes between
// two signatures is an unbiased estimate of the Jaccard similarity of
// the underlying token sets (variance j(1-j)/k).

#include <cstdint>
#include <string>
#include <vector>

#include "pforge/types.hpp"

namespace pforge {

// Word tokens in text order, duplicates kept: lowercased, split on
// Unicode whitespace and punctuation (hyphens split words).
std::vector<std::string> tokenize_words(const std::string& text);

// Sorted, duplicate-free variant of the above (set semantics).
std::vector<std::string> tokenize_unigrams(const std::string& text);

inline constexpr std::uint64_t kEmptySetSentinel = UINT64_MAX;

// Empty token set yields the all-sentinel signature.
MinHashSignature minhash_signature(const std::vector<std::string>& tokens, int k = 128,
                                   std::uint64_t seed = 1);

// |a ∩ b| / |a ∪ b| over sorted unique token vectors; 1.0 when both empty.
// Brute-force oracle for the estimator.
double exact_jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b);

// Fraction of agreeing lanes. Throws IncompatibleSignatures unless both
// sides share k and seed.
double estimate_jaccard(const MinHashSignature& s1, const MinHashSignature& s2);

// LSH S-curve: probability that a pair with true Jaccard j collides in at
// least one of `bands` bands of `rows` rows: 1 - (1 - j^rows)^bands.
double candidate_probability(double jaccard, int bands, int rows);

} // namespace pforge
