#include <doctest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "pforge/cassette.hpp"
#include "pforge/dedup.hpp"
#include "pforge/embedder.hpp"
#include "pforge/errors.hpp"
#include "pforge/http_backend.hpp"
#include "pforge/mock_backend.hpp"

using namespace pforge;
using nlohmann::json;

TEST_CASE("mock is a pure function of prompt and seed") {
    MockBackend mock;
    const DecodingParams d{1.0, 256, 7};
    const auto a = mock.complete("write something about tide pools", d);
    const auto b = mock.complete("write something about tide pools", d);
    CHECK(a.text == b.text);
    CHECK_FALSE(a.text.empty());
    CHECK(a.text.find("[draft ") != std::string::npos); // hash tag of the prompt

    DecodingParams other = d;
    other.seed = 8;
    CHECK(mock.complete("write something about tide pools", other).text != a.text);
}

TEST_CASE("mock answers persona-inference prompts with a JSON string array") {
    MockBackend mock(3);
    const std::string prompt =
        "Read the text below, then answer the question about it.\n\nText:\n<<<\n"
        "A study of eigenvalues in spectral graph theory.\n>>>\n\n"
        "Question: Who is likely to read this text?\nRespond with only a JSON array of persona "
        "description strings.";
    const auto reply = mock.complete(prompt, {});
    const json arr = json::parse(reply.text);
    REQUIRE(arr.is_array());
    REQUIRE(arr.size() == 3);
    for (const auto& el : arr) {
        CHECK(el.is_string());
        CHECK_FALSE(el.get<std::string>().empty());
    }
    // topic comes from the text, so a salient word shows up in the persona
    CHECK(arr[0].get<std::string>().find("eigenvalues") != std::string::npos);
}

TEST_CASE("mock answers relation prompts with relation/description objects") {
    MockBackend mock(2);
    const std::string prompt =
        "Given persona: \"a nurse at a children's hospital\"\n\nWho is in close relationship "
        "with the given persona?\nRespond with only a JSON array of objects, each with keys "
        "\"relation\" and \"description\".";
    const json arr = json::parse(mock.complete(prompt, {}).text);
    REQUIRE(arr.is_array());
    REQUIRE(arr.size() == 2);
    for (const auto& el : arr) {
        CHECK(el.contains("relation"));
        CHECK(el.contains("description"));
    }
}

TEST_CASE("mock judges equality prompts by literal comparison") {
    MockBackend mock;
    CHECK(mock.complete("Expression 1: 42\nExpression 2: 42\nRespond", {}).text == "Yes");
    CHECK(mock.complete("Expression 1: 42\nExpression 2: 41\nRespond", {}).text == "No");
}

TEST_CASE("mock solves with a boxed final answer") {
    MockBackend mock;
    const auto text = mock.complete("Solve the following problem. ...", {}).text;
    CHECK(text.find("\\boxed{") != std::string::npos);

    const auto pot =
        mock.complete("Solve the following problem by writing a Python program ...", {}).text;
    CHECK(pot.find("```python") != std::string::npos);
}

TEST_CASE("in-flight requests never exceed max_concurrency") {
    MockBackend mock(2, 4, 200); // 4 permits, 200us of work per call
    std::vector<std::thread> threads;
    for (int t = 0; t < 16; ++t) {
        threads.emplace_back([&] {
            for (int i = 0; i < 8; ++i) {
                (void)mock.complete("prompt " + std::to_string(i), {});
            }
        });
    }
    for (auto& t : threads) t.join();
    CHECK(mock.calls() == 16 * 8);
    CHECK(mock.peak_in_flight() <= 4);
    CHECK(mock.peak_in_flight() >= 2); // the gate actually saw concurrency
}

TEST_CASE("embedding config defaults to dim 512") {
    CHECK(EmbeddingConfig{}.dim == 512);
}

TEST_CASE("mock embedder: unit norm, determinism, batching") {
    MockEmbedder embedder(512, 7);
    const auto vecs = embedder.embed({"a farmer rotating crops",
                                      "a farmer rotating crops",
                                      "an astronomer cataloguing variable stars"});
    REQUIRE(vecs.size() == 3);
    for (const auto& v : vecs) {
        REQUIRE(v.size() == 512);
        double norm = 0.0;
        for (float x : v) norm += static_cast<double>(x) * x;
        CHECK(std::abs(std::sqrt(norm) - 1.0) <= 1e-6);
    }
    CHECK(cosine_similarity(vecs[0], vecs[1]) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(cosine_similarity(vecs[0], vecs[2]) < 0.5);
}

TEST_CASE("mock embedder maps near-duplicates to high cosine") {
    MockEmbedder embedder(512, 7);
    const auto vecs = embedder.embed(
        {"a nurse at a children's hospital specializing in oncology",
         "a nurse at a children's hospital specializing in oncology care"});
    CHECK(cosine_similarity(vecs[0], vecs[1]) > 0.8);
}

TEST_CASE("cassette record then replay round-trips") {
    const auto path = std::filesystem::temp_directory_path() / "pforge-cassette-test.jsonl";
    std::filesystem::remove(path);

    const DecodingParams d{0.0, 64, 3};
    std::string recorded;
    {
        RecordingBackend rec(std::make_shared<MockBackend>(), path);
        recorded = rec.complete("write a line about lighthouses", d).text;
        (void)rec.complete("write a line about mills", d);
    }
    ReplayBackend replay(path);
    CHECK(replay.size() == 2);
    CHECK(replay.complete("write a line about lighthouses", d).text == recorded);
    CHECK_THROWS_AS((void)replay.complete("never recorded", d), CassetteMiss);

    DecodingParams other = d;
    other.temperature = 0.5; // decoding is part of the key
    CHECK_THROWS_AS((void)replay.complete("write a line about lighthouses", other), CassetteMiss);
    std::filesystem::remove(path);
}

TEST_CASE("backend config validation") {
    BackendConfig cfg;
    cfg.max_concurrency = 0;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg.max_concurrency = 1;
    cfg.retry.max_attempts = 0;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg.retry.max_attempts = 1;
    cfg.kind = "telepathy";
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg.kind = "replay";
    CHECK_THROWS_AS(validate(cfg), ConfigError); // needs cassette_path
}

namespace {

struct LocalServer {
    httplib::Server server;
    int port = 0;
    std::thread thread;

    explicit LocalServer() = default;

    void start() {
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }

    ~LocalServer() {
        server.stop();
        if (thread.joinable()) thread.join();
    }
};

json chat_payload(const std::string& text) {
    return json{{"choices", json::array({json{{"message", json{{"content", text}}}}})},
                {"usage", {{"prompt_tokens", 12}, {"completion_tokens", 5}}}};
}

} // namespace

TEST_CASE("http backend retries a transient 429 and reports the attempt count") {
    LocalServer ls;
    std::atomic<int> hits{0};
    ls.server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        const json body = json::parse(req.body);
        CHECK(body.at("model") == "test-model");
        if (hits.fetch_add(1) == 0) {
            res.status = 429;
            res.set_content("slow down", "text/plain");
            return;
        }
        res.set_content(chat_payload("recovered").dump(), "application/json");
    });
    ls.start();

    BackendConfig cfg;
    cfg.kind = "http_openai_compatible";
    cfg.base_url = "http://127.0.0.1:" + std::to_string(ls.port) + "/v1";
    cfg.model_name = "test-model";
    cfg.retry.max_attempts = 3;
    cfg.retry.backoff_base_ms = 1;
    HttpBackend backend(cfg);

    const Completion c = backend.complete("hello", {});
    CHECK(c.text == "recovered");
    CHECK(c.attempts == 2);
    CHECK(c.prompt_tokens == 12);
    CHECK(hits.load() == 2);
}

TEST_CASE("http backend maps auth and exhaustion to fatal errors") {
    LocalServer ls;
    std::atomic<int> hits{0};
    ls.server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        ++hits;
        res.status = 429;
        res.set_content("nope", "text/plain");
    });
    ls.server.Post("/auth/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        res.status = 401;
        res.set_content("who are you", "text/plain");
    });
    ls.start();

    BackendConfig cfg;
    cfg.kind = "http_openai_compatible";
    cfg.base_url = "http://127.0.0.1:" + std::to_string(ls.port) + "/v1";
    cfg.model_name = "test-model";
    cfg.retry.max_attempts = 2;
    cfg.retry.backoff_base_ms = 1;
    CHECK_THROWS_AS((void)HttpBackend(cfg).complete("x", {}), RateLimitedExhausted);
    CHECK(hits.load() == 2);

    cfg.base_url = "http://127.0.0.1:" + std::to_string(ls.port) + "/auth";
    CHECK_THROWS_AS((void)HttpBackend(cfg).complete("x", {}), AuthError);
}

TEST_CASE("http backend reads the API key from the named env var only") {
    BackendConfig cfg;
    cfg.kind = "http_openai_compatible";
    cfg.base_url = "http://127.0.0.1:1/v1";
    cfg.api_key_env_var = "PFORGE_TEST_MISSING_KEY";
    ::unsetenv("PFORGE_TEST_MISSING_KEY");
    CHECK_THROWS_AS((void)HttpBackend(cfg), AuthError);

    ::setenv("PFORGE_TEST_MISSING_KEY", "sk-test", 1);
    CHECK_NOTHROW(HttpBackend{cfg});
    ::unsetenv("PFORGE_TEST_MISSING_KEY");
}

TEST_CASE("http embedder normalizes provider vectors") {
    LocalServer ls;
    ls.server.Post("/v1/embeddings", [&](const httplib::Request& req, httplib::Response& res) {
        const json body = json::parse(req.body);
        const auto inputs = body.at("input").get<std::vector<std::string>>();
        json data = json::array();
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            data.push_back(json{{"embedding", std::vector<double>{3.0, 4.0, 0.0}}});
        }
        res.set_content(json{{"data", data}}.dump(), "application/json");
    });
    ls.start();

    EmbeddingConfig cfg;
    cfg.kind = "http_openai_compatible";
    cfg.base_url = "http://127.0.0.1:" + std::to_string(ls.port) + "/v1";
    cfg.dim = 3;
    HttpEmbedder embedder(cfg, RetryPolicy{2, 1});
    const auto vecs = embedder.embed({"a", "b"});
    REQUIRE(vecs.size() == 2);
    CHECK(vecs[0][0] == doctest::Approx(0.6f));
    CHECK(vecs[0][1] == doctest::Approx(0.8f));
}
