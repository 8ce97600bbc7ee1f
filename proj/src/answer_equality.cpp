#include "pforge/answer_equality.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

#include "pforge/errors.hpp"

namespace pforge {

namespace {

// \frac{a}{b}, \dfrac{a}{b}, \tfrac{a}{b} -> a/b (one level deep).
std::string unfold_frac(std::string s) {
    const char* names[] = {"\\dfrac", "\\tfrac", "\\frac"};
    for (const char* name : names) {
        for (;;) {
            const auto at = s.find(name);
            if (at == std::string::npos) break;
            std::size_t i = at + std::string(name).size();
            auto read_group = [&](std::string& out) -> bool {
                if (i >= s.size() || s[i] != '{') return false;
                int depth = 0;
                const std::size_t start = ++i;
                for (; i < s.size(); ++i) {
                    if (s[i] == '{') ++depth;
                    else if (s[i] == '}') {
                        if (depth == 0) {
                            out = s.substr(start, i - start);
                            ++i;
                            return true;
                        }
                        --depth;
                    }
                }
                return false;
            };
            std::string a, b;
            if (!read_group(a) || !read_group(b)) break;
            s = s.substr(0, at) + a + "/" + b + s.substr(i);
        }
    }
    return s;
}

} // namespace

std::string normalize_answer(const std::string& raw) {
    std::string s = unfold_frac(raw);

    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        const unsigned char c = static_cast<unsigned char>(s[i]);
        if (c == '$') continue;
        if (std::isspace(c)) continue;
        // U+2212 (minus sign) -> '-'
        if (c == 0xE2 && i + 2 < s.size() && static_cast<unsigned char>(s[i + 1]) == 0x88 &&
            static_cast<unsigned char>(s[i + 2]) == 0x92) {
            out.push_back('-');
            i += 2;
            continue;
        }
        // thousands separator: comma between digits
        if (c == ',' && !out.empty() && std::isdigit(static_cast<unsigned char>(out.back())) &&
            i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1]))) {
            continue;
        }
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    while (!out.empty() && out.back() == '.') out.pop_back();
    return out;
}

namespace {

constexpr int kMaxDigits = 18;

bool read_digits(const std::string& s, std::size_t& i, long long& value, int& count) {
    value = 0;
    count = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
        if (++count > kMaxDigits) return false;
        value = value * 10 + (s[i] - '0');
        ++i;
    }
    return true;
}

} // namespace

std::optional<Rational> parse_rational(const std::string& s) {
    if (s.empty()) return std::nullopt;
    std::size_t i = 0;
    long long sign = 1;
    if (s[i] == '+' || s[i] == '-') {
        if (s[i] == '-') sign = -1;
        ++i;
    }

    long long intpart = 0;
    int intdigits = 0;
    if (!read_digits(s, i, intpart, intdigits)) return std::nullopt;

    long long num = intpart;
    long long den = 1;
    bool any_digits = intdigits > 0;

    if (i < s.size() && s[i] == '.') {
        ++i;
        long long fracpart = 0;
        int fracdigits = 0;
        if (!read_digits(s, i, fracpart, fracdigits)) return std::nullopt;
        if (fracdigits == 0 && intdigits == 0) return std::nullopt;
        if (intdigits + fracdigits > kMaxDigits) return std::nullopt;
        for (int d = 0; d < fracdigits; ++d) den *= 10;
        num = intpart * den + fracpart;
        any_digits = any_digits || fracdigits > 0;
    } else if (i < s.size() && s[i] == '/') {
        ++i;
        long long denom = 0;
        int denomdigits = 0;
        if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
            if (s[i] == '-') sign = -sign;
            ++i;
        }
        if (!read_digits(s, i, denom, denomdigits)) return std::nullopt;
        if (denomdigits == 0 || denom == 0) return std::nullopt;
        den = denom;
    }

    if (!any_digits || i != s.size()) return std::nullopt;

    const long long g = std::gcd(num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
    return Rational{sign * num, den};
}

bool fast_answer_equal(const std::string& expected, const std::string& got) {
    const std::string a = normalize_answer(expected);
    const std::string b = normalize_answer(got);
    if (a == b) return true;
    const auto ra = parse_rational(a);
    const auto rb = parse_rational(b);
    if (ra && rb) {
        // components are <= 18 digits, so the cross products are exact
        return static_cast<__int128>(ra->num) * rb->den ==
               static_cast<__int128>(rb->num) * ra->den;
    }
    return false;
}

std::string build_equality_judge_prompt(const std::string& expected, const std::string& got) {
    auto one_line = [](std::string s) {
        std::replace(s.begin(), s.end(), '\n', ' ');
        return s;
    };
    return "Decide whether the following two expressions are equivalent final answers to the "
           "same math problem. Count formatting differences and trivially equal forms (such as "
           "exactly equal fractions and decimals) as equivalent; count different values as not "
           "equivalent.\n\n"
           "Expression 1: " +
           one_line(expected) + "\nExpression 2: " + one_line(got) +
           "\n\nRespond with exactly one word: Yes or No.";
}

EqualityChecker::EqualityChecker(std::shared_ptr<ChatBackend> judge, DecodingParams decoding)
    : judge_(std::move(judge)), decoding_(decoding) {}

bool EqualityChecker::equal(const std::string& expected, const std::string& got) {
    if (fast_answer_equal(expected, got)) return true;
    if (!judge_) return false;

    const auto key = std::make_pair(expected, got);
    {
        std::lock_guard lk(mu_);
        const auto it = cache_.find(key);
        if (it != cache_.end()) {
            ++cache_hits_;
            return it->second;
        }
    }

    std::string reply;
    try {
        reply = judge_->complete(build_equality_judge_prompt(expected, got), decoding_).text;
    } catch (const BackendError& e) {
        throw JudgeUnavailable(e.what());
    }

    std::string lowered;
    for (char c : reply) lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    const auto first = lowered.find_first_not_of(" \t\r\n");
    const bool verdict = first != std::string::npos && lowered.compare(first, 3, "yes") == 0;

    std::lock_guard lk(mu_);
    ++judge_calls_;
    cache_[key] = verdict;
    return verdict;
}

} // namespace pforge
