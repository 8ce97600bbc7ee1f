#include <doctest.h>

#include <random>

#include "pforge/json_io.hpp"
#include "pforge/types.hpp"

using namespace pforge;

namespace {

Persona nurse_persona() {
    Persona p;
    p.description = "a nurse at a children's hospital who specializes in pediatric oncology";
    p.granularity = Granularity::fine;
    p.provenance = FromText{"t1", "read"};
    p.id = persona_id_for(p.description, p.provenance);
    return p;
}

} // namespace

TEST_CASE("validate_persona accepts a well-formed persona") {
    CHECK(validate_persona(nurse_persona()).empty());
}

TEST_CASE("validate_persona flags an empty description") {
    Persona p = nurse_persona();
    p.description = "";
    const auto v = validate_persona(p);
    REQUIRE(v.size() == 1);
    CHECK(v[0] == Violation::EmptyDescription);

    p.description = "   \t ";
    CHECK(validate_persona(p) == std::vector{Violation::EmptyDescription});
}

TEST_CASE("validate_persona flags depth beyond the iteration cap") {
    Persona p = nurse_persona();
    p.provenance = FromPersona{"parent", "co-worker relationship", 7};
    const auto v = validate_persona(p, 6);
    REQUIRE(v.size() == 1);
    CHECK(v[0] == Violation::DepthExceeded);

    p.provenance = FromPersona{"parent", "co-worker relationship", 6};
    CHECK(validate_persona(p, 6).empty());

    p.provenance = FromPersona{"parent", "co-worker relationship", 0};
    CHECK(validate_persona(p, 6) == std::vector{Violation::DepthNotPositive});
}

TEST_CASE("validate_persona caps the description at 150 tokens") {
    Persona p = nurse_persona();
    std::string longdesc;
    for (int i = 0; i < 151; ++i) longdesc += "word ";
    p.description = longdesc;
    CHECK(validate_persona(p) == std::vector{Violation::DescriptionTooLong});
}

TEST_CASE("content-derived ids are stable and provenance-sensitive") {
    const Persona a = nurse_persona();
    const Persona b = nurse_persona();
    CHECK(a.id == b.id);

    Persona c = nurse_persona();
    c.provenance = FromText{"t2", "read"};
    CHECK(persona_id_for(c.description, c.provenance) != a.id);
}

namespace {

std::mt19937_64 rng(12345);

std::string random_text(int max_words) {
    static const char* words[] = {"nurse",  "quantum", "garden", "ledger", "violin",
                                  "harbor", "essay",   "triage", "mosaic", "archive"};
    std::uniform_int_distribution<int> len(1, max_words);
    std::uniform_int_distribution<std::size_t> pick(0, std::size(words) - 1);
    std::string out;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) {
        if (i) out += ' ';
        out += words[pick(rng)];
    }
    return out;
}

Persona random_persona() {
    Persona p;
    p.description = random_text(12);
    std::uniform_int_distribution<int> g(0, 2);
    p.granularity = static_cast<Granularity>(g(rng));
    switch (g(rng)) {
    case 0: p.provenance = FromText{random_text(1), "read"}; break;
    case 1: {
        std::uniform_int_distribution<int> d(1, 6);
        p.provenance = FromPersona{random_text(1), random_text(3), d(rng)};
        break;
    }
    default: p.provenance = Manual{};
    }
    p.id = persona_id_for(p.description, p.provenance);
    if (g(rng) == 0) {
        p.embedding = std::vector<float>{0.25f, -0.5f, 0.8125f};
    }
    if (g(rng) == 1) {
        MinHashSignature sig;
        sig.k = 4;
        sig.seed = 9;
        sig.values = {1, 2, 3, std::uint64_t(-1)};
        p.signature = sig;
    }
    return p;
}

} // namespace

TEST_CASE("persona serialization round-trips exactly") {
    for (int i = 0; i < 200; ++i) {
        const Persona p = random_persona();
        const json j = p;
        const Persona back = json::parse(j.dump()).get<Persona>();
        CHECK(back == p);
    }
}

TEST_CASE("synthesis item serialization round-trips exactly") {
    for (int i = 0; i < 100; ++i) {
        SynthesisItem item;
        item.scenario = static_cast<Scenario>(i % 10);
        item.persona_id = random_text(1);
        item.prompt_text = random_text(20);
        item.output_text = random_text(20);
        item.id = item_id_for(item.scenario, item.persona_id, item.prompt_text, i);
        if (i % 2) item.solutions.push_back(Solution{"mock-assistant", "42", "x = 42"});
        if (i % 3) item.meta["mode"] = "zero_shot";
        const json j = item;
        const SynthesisItem back = json::parse(j.dump()).get<SynthesisItem>();
        CHECK(back == item);
    }
}

TEST_CASE("source text and edge round-trip") {
    const SourceText t{"t-9", "An essay on attention mechanisms.", "web", "en"};
    CHECK(json::parse(json(t).dump()).get<SourceText>() == t);

    const RelationEdge e{"pa", "pb", "patient-caregiver relationship", 3};
    CHECK(json::parse(json(e).dump()).get<RelationEdge>() == e);
}

TEST_CASE("ws token counting") {
    CHECK(count_ws_tokens("") == 0);
    CHECK(count_ws_tokens("one") == 1);
    CHECK(count_ws_tokens("  a\tb \n c ") == 3);
}
