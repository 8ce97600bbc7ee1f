#include "pforge/solutions.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <regex>
#include <thread>

#include "pforge/errors.hpp"

namespace pforge {

namespace {

std::string trim(std::string s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    return s;
}

std::optional<std::string> last_boxed(const std::string& text) {
    const auto at = text.rfind("\\boxed{");
    if (at == std::string::npos) return std::nullopt;
    std::size_t i = at + 7;
    int depth = 0;
    const std::size_t start = i;
    for (; i < text.size(); ++i) {
        if (text[i] == '{') ++depth;
        else if (text[i] == '}') {
            if (depth == 0) return trim(text.substr(start, i - start));
            --depth;
        }
    }
    return std::nullopt;
}

std::string last_nonempty_line(const std::string& text) {
    std::size_t end = text.size();
    while (end > 0) {
        std::size_t begin = text.rfind('\n', end - 1);
        const std::size_t line_start = begin == std::string::npos ? 0 : begin + 1;
        const std::string line = trim(text.substr(line_start, end - line_start));
        if (!line.empty()) return line;
        if (begin == std::string::npos) break;
        end = begin;
    }
    return "";
}

} // namespace

std::string extract_final_answer(const std::string& full_text) {
    if (auto boxed = last_boxed(full_text)) return *boxed;

    const std::string line = last_nonempty_line(full_text);
    static const std::regex number_re(R"([-+]?(?:\d+(?:,\d{3})*(?:\.\d+)?|\.\d+)(?:/\d+)?)");
    std::string last_match;
    for (auto it = std::sregex_iterator(line.begin(), line.end(), number_re);
         it != std::sregex_iterator(); ++it) {
        last_match = it->str();
    }
    return last_match.empty() ? line : last_match;
}

std::string build_solve_prompt(const SynthesisItem& item, const std::string& strategy) {
    if (strategy == "pot") {
        return "Solve the following problem by writing a Python program that computes the "
               "answer.\n\nProblem:\n" +
               item.output_text +
               "\n\nAfter the code, state the final numeric answer alone on the last line.";
    }
    return "Solve the following problem. Reason step by step, then give the final answer inside "
           "\\boxed{}.\n\nProblem:\n" +
           item.output_text;
}

SolveResult solve_items(const std::vector<SynthesisItem>& items,
                        const std::vector<ProducerConfig>& producers, int max_concurrency) {
    if (producers.empty()) throw ConfigError("at least one producer is required");
    for (const auto& p : producers) {
        if (!p.backend) throw ConfigError("producer without backend");
        if (p.strategy != "assistant" && p.strategy != "pot") {
            throw ConfigError("unknown producer strategy: " + p.strategy);
        }
    }

    SolveResult out;
    out.items = items;

    struct Task {
        std::size_t item_index;
        std::size_t producer_index;
    };
    std::vector<Task> tasks;
    for (std::size_t i = 0; i < items.size(); ++i) {
        for (std::size_t p = 0; p < producers.size(); ++p) tasks.push_back({i, p});
    }

    struct TaskResult {
        std::optional<Solution> solution;
        std::optional<SkipRecord> failure;
    };
    std::vector<TaskResult> results(tasks.size());

    auto run_task = [&](const Task& t) {
        const auto& item = out.items[t.item_index];
        const auto& prod = producers[t.producer_index];
        const std::string label = prod.label.empty()
                                      ? prod.backend->label() + "-" + prod.strategy
                                      : prod.label;
        TaskResult r;
        try {
            const std::string prompt = build_solve_prompt(item, prod.strategy);
            const Completion c = prod.backend->complete(prompt, prod.decoding);
            r.solution = Solution{label, extract_final_answer(c.text), c.text};
        } catch (const AuthError&) {
            throw;
        } catch (const Error& e) {
            r.failure = SkipRecord{item.id, label, e.what()};
        }
        return r;
    };

    const int workers =
        std::max(1, std::min<int>(max_concurrency, static_cast<int>(tasks.size())));
    if (workers == 1) {
        for (std::size_t i = 0; i < tasks.size(); ++i) results[i] = run_task(tasks[i]);
    } else {
        std::atomic<std::size_t> next{0};
        std::atomic<bool> failed{false};
        std::exception_ptr first_error;
        std::mutex error_mu;
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                while (!failed.load()) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= tasks.size()) break;
                    try {
                        results[i] = run_task(tasks[i]);
                    } catch (...) {
                        std::lock_guard lk(error_mu);
                        if (!first_error) first_error = std::current_exception();
                        failed.store(true);
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (results[i].solution) {
            out.items[tasks[i].item_index].solutions.push_back(std::move(*results[i].solution));
        }
        if (results[i].failure) out.failures.push_back(std::move(*results[i].failure));
    }
    return out;
}

} // namespace pforge
