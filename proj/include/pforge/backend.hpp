#pragma once
// Chat-completion backend abstraction. Implementations: OpenAI-compatible
// HTTP, deterministic mock, and cassette replay. All are thread-safe; a
// bounded-permit gate enforces max_concurrency per backend instance.

#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

namespace pforge {

struct DecodingParams {
    double temperature = 1.0;
    int max_tokens = 1024;
    std::optional<int> seed;

    bool operator==(const DecodingParams&) const = default;
};

void to_json(nlohmann::json& j, const DecodingParams& d);
void from_json(const nlohmann::json& j, DecodingParams& d);

struct Completion {
    std::string text;
    int prompt_tokens = 0;
    int completion_tokens = 0;
    int attempts = 1; // total tries including retries
    std::string producer;
};

struct RetryPolicy {
    int max_attempts = 3;
    int backoff_base_ms = 100;
};

struct BackendConfig {
    std::string kind = "mock"; // http_openai_compatible | mock | replay
    std::string base_url;
    std::string model_name;
    std::string api_key_env_var; // name of the env var, never the key itself
    int max_concurrency = 4;
    RetryPolicy retry;
    int timeout_ms = 30000;
    int mock_fanout = 2;        // personas/relations per mock reply
    std::string cassette_path;  // replay kind
};

void validate(const BackendConfig& cfg); // throws ConfigError

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual Completion complete(const std::string& prompt, const DecodingParams& decoding) = 0;
    virtual std::string label() const = 0;
};

std::unique_ptr<ChatBackend> make_backend(const BackendConfig& cfg);

// Counting gate with peak instrumentation (the max_concurrency invariant
// is asserted against peak() in tests).
class ConcurrencyGate {
public:
    explicit ConcurrencyGate(int permits) : permits_(permits) {}

    class Pass {
    public:
        explicit Pass(ConcurrencyGate& gate) : gate_(&gate) { gate_->acquire(); }
        ~Pass() {
            if (gate_) gate_->release();
        }
        Pass(const Pass&) = delete;
        Pass& operator=(const Pass&) = delete;

    private:
        ConcurrencyGate* gate_;
    };

    int peak_in_flight() const {
        std::lock_guard lk(mu_);
        return peak_;
    }

private:
    void acquire() {
        std::unique_lock lk(mu_);
        cv_.wait(lk, [&] { return in_flight_ < permits_; });
        ++in_flight_;
        peak_ = std::max(peak_, in_flight_);
    }
    void release() {
        std::lock_guard lk(mu_);
        --in_flight_;
        cv_.notify_one();
    }

    mutable std::mutex mu_;
    std::condition_variable cv_;
    int permits_;
    int in_flight_ = 0;
    int peak_ = 0;
};

} // namespace pforge
