#pragma once
// Two-tier answer equality: a fast path of canonical normalization plus
// exact rational comparison, and an optional LLM judge for everything
// the fast path cannot decide. Judge verdicts are cached.

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>

#include "pforge/backend.hpp"

namespace pforge {

// Trim, lowercase, strip $ and \frac sugar, drop thousands separators
// and whitespace.
std::string normalize_answer(const std::string& raw);

// Exact value of an integer, a/b fraction, or terminating decimal.
// Components are capped at 18 digits so cross-multiplication is exact.
struct Rational {
    long long num = 0;
    long long den = 1; // > 0, reduced

    bool operator==(const Rational&) const = default;
};
std::optional<Rational> parse_rational(const std::string& normalized);

// Tier 1: normalized string equality, else exact rational equality when
// both sides parse (unifies fractions and terminating decimals).
bool fast_answer_equal(const std::string& expected, const std::string& got);

std::string build_equality_judge_prompt(const std::string& expected, const std::string& got);

class EqualityChecker {
public:
    EqualityChecker() = default; // fast path only
    explicit EqualityChecker(std::shared_ptr<ChatBackend> judge,
                             DecodingParams decoding = DecodingParams{0.0, 16, std::nullopt});

    // Fast path first; judge consulted (and cached by the (expected, got)
    // pair) only when the fast path says unequal. Throws JudgeUnavailable
    // when the judge backend fails.
    bool equal(const std::string& expected, const std::string& got);

    bool has_judge() const { return judge_ != nullptr; }
    std::size_t judge_calls() const { return judge_calls_; }
    std::size_t cache_hits() const { return cache_hits_; }

private:
    std::shared_ptr<ChatBackend> judge_;
    DecodingParams decoding_{0.0, 16, std::nullopt};
    std::map<std::pair<std::string, std::string>, bool> cache_;
    std::mutex mu_;
    std::size_t judge_calls_ = 0;
    std::size_t cache_hits_ = 0;
};

} // namespace pforge
