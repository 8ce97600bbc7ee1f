#pragma once
// Deterministic offline backend. Output is a pure function of
// (prompt, seed, fanout): prompts that look like persona-inference or
// relation-expansion requests get schema-valid JSON; solve-style prompts
// get a worked answer ending in \boxed{...}; equality-judge prompts are
// answered by literal comparison; everything else gets filler text
// carrying a hash tag of the prompt.

#include <atomic>

#include "pforge/backend.hpp"

namespace pforge {

std::string mock_complete(const std::string& prompt, std::uint64_t seed, int fanout = 2);

class MockBackend : public ChatBackend {
public:
    explicit MockBackend(int fanout = 2, int max_concurrency = 4, int busy_wait_us = 0)
        : fanout_(fanout), gate_(max_concurrency), busy_wait_us_(busy_wait_us) {}

    Completion complete(const std::string& prompt, const DecodingParams& decoding) override;
    std::string label() const override { return "mock"; }

    int peak_in_flight() const { return gate_.peak_in_flight(); }
    int calls() const { return calls_.load(); }

private:
    int fanout_;
    ConcurrencyGate gate_;
    int busy_wait_us_;
    std::atomic<int> calls_{0};
};

} // namespace pforge
