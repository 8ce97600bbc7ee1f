#include "pforge/mock_backend.hpp"

#include <algorithm>
#include <chrono>
#include <thread>
#include <vector>

#include <json.hpp>

#include "pforge/minhash.hpp"
#include "pforge/stable_hash.hpp"
#include "pforge/types.hpp"

namespace pforge {

namespace {

using nlohmann::json;

const std::vector<std::string>& roles() {
    static const std::vector<std::string> v = {
        "researcher", "teacher",   "engineer", "nurse",     "journalist", "historian",
        "economist",  "coach",     "librarian", "farmer",   "architect",  "chemist",
        "pilot",      "musician",  "surveyor",  "actuary",  "translator", "geologist"};
    return v;
}

const std::vector<std::string>& adjectives() {
    static const std::vector<std::string> v = {"curious",     "seasoned",  "pragmatic",
                                               "meticulous",  "aspiring",  "veteran",
                                               "independent", "dedicated", "retired"};
    return v;
}

const std::vector<std::string>& relations() {
    static const std::vector<std::string> v = {
        "patient-caregiver relationship", "co-worker relationship",
        "assistance relationship",        "mentorship relationship",
        "family relationship",            "neighbor relationship",
        "teacher-student relationship",   "friendship"};
    return v;
}

std::string slice_between(const std::string& s, const std::string& open,
                          const std::string& close) {
    const auto a = s.find(open);
    if (a == std::string::npos) return s;
    const auto b = s.find(close, a + open.size());
    if (b == std::string::npos) return s.substr(a + open.size());
    return s.substr(a + open.size(), b - a - open.size());
}

// Longest word of the text, ties broken lexicographically; gives the mock
// persona a topic that actually occurs in the source text.
std::string salient_topic(const std::string& text) {
    std::string best;
    for (const auto& tok : tokenize_unigrams(text)) {
        if (tok.size() > best.size() || (tok.size() == best.size() && tok < best)) {
            best = tok;
        }
    }
    return best.empty() ? "general topics" : best;
}

std::string tag_of(std::uint64_t h) {
    return to_hex16(h).substr(0, 10);
}

std::string trim_copy(std::string s) {
    const auto issp = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && issp(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
    while (!s.empty() && issp(static_cast<unsigned char>(s.back()))) s.pop_back();
    return s;
}

std::string lower_copy(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string text_to_persona_reply(const std::string& prompt, std::uint64_t h, int fanout) {
    const std::string text = slice_between(prompt, "<<<\n", "\n>>>");
    const std::string topic = salient_topic(text);
    json arr = json::array();
    for (int i = 0; i < fanout; ++i) {
        const std::uint64_t hi = splitmix64(h ^ static_cast<std::uint64_t>(i) * 0x9e3779b9ULL);
        const auto& adj = adjectives()[hi % adjectives().size()];
        const auto& role = roles()[(hi >> 8) % roles().size()];
        arr.push_back("a " + adj + " " + role + " with a strong interest in " + topic +
                      " (cohort " + tag_of(hi) + ")");
    }
    return arr.dump();
}

std::string persona_to_persona_reply(std::uint64_t h, int fanout) {
    json arr = json::array();
    for (int i = 0; i < fanout; ++i) {
        const std::uint64_t hi = splitmix64(h ^ (static_cast<std::uint64_t>(i) + 1) * 0x51ed2701ULL);
        const auto& rel = relations()[hi % relations().size()];
        const auto& role = roles()[(hi >> 16) % roles().size()];
        arr.push_back(json{{"relation", rel},
                           {"description", "a " + role + " who is part of the " + tag_of(hi) +
                                               " community circle"}});
    }
    return arr.dump();
}

std::string judge_reply(const std::string& prompt) {
    const std::string e1 = trim_copy(slice_between(prompt, "Expression 1: ", "\n"));
    const std::string e2 = trim_copy(slice_between(prompt, "Expression 2: ", "\n"));
    return lower_copy(e1) == lower_copy(e2) ? "Yes" : "No";
}

std::string solve_reply(const std::string& prompt, std::uint64_t h) {
    const std::uint64_t n = h % 997;
    if (prompt.find("Python program") != std::string::npos) {
        return "```python\nresult = " + std::to_string(n) + "\nprint(result)\n```\n" +
               std::to_string(n);
    }
    return "Working through the quantities step by step gives a single value.\n"
           "The final answer is \\boxed{" +
           std::to_string(n) + "}";
}

std::string filler_reply(const std::string& prompt, std::uint64_t h) {
    const auto tokens = tokenize_unigrams(prompt);
    std::string picked;
    for (int i = 0; i < 8 && !tokens.empty(); ++i) {
        const std::uint64_t hi = splitmix64(h + static_cast<std::uint64_t>(i) * 1099511628211ULL);
        if (!picked.empty()) picked += " ";
        picked += tokens[hi % tokens.size()];
    }
    return "[draft " + tag_of(h) + "] " + picked;
}

} // namespace

std::string mock_complete(const std::string& prompt, std::uint64_t seed, int fanout) {
    const std::uint64_t h = stable_hash64(prompt, seed);
    if (prompt.find("Who is likely to") != std::string::npos) {
        return text_to_persona_reply(prompt, h, fanout);
    }
    if (prompt.find("in close relationship with") != std::string::npos) {
        return persona_to_persona_reply(h, fanout);
    }
    if (prompt.find("Expression 1:") != std::string::npos &&
        prompt.find("Expression 2:") != std::string::npos) {
        return judge_reply(prompt);
    }
    if (prompt.find("Solve the following problem") != std::string::npos) {
        return solve_reply(prompt, h);
    }
    return filler_reply(prompt, h);
}

Completion MockBackend::complete(const std::string& prompt, const DecodingParams& decoding) {
    ConcurrencyGate::Pass pass(gate_);
    calls_.fetch_add(1);
    if (busy_wait_us_ > 0) {
        std::this_thread::sleep_for(std::chrono::microseconds(busy_wait_us_));
    }
    const std::uint64_t seed =
        decoding.seed ? static_cast<std::uint64_t>(*decoding.seed) : 0ULL;
    Completion c;
    c.text = mock_complete(prompt, seed, fanout_);
    c.prompt_tokens = count_ws_tokens(prompt);
    c.completion_tokens = count_ws_tokens(c.text);
    c.producer = label();
    return c;
}

} // namespace pforge
