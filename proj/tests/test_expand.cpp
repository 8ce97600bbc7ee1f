#include <doctest.h>

#include <cmath>
#include <set>

#include "pforge/errors.hpp"
#include "pforge/mock_backend.hpp"
#include "pforge/persona_to_persona.hpp"

using namespace pforge;

namespace {

Persona seed_persona(const std::string& desc = "a nurse at a children's hospital") {
    Persona p;
    p.description = desc;
    p.granularity = Granularity::fine;
    p.provenance = Manual{};
    p.id = persona_id_for(p.description, p.provenance);
    return p;
}

} // namespace

TEST_CASE("p2p prompt embeds the description and requests relation objects") {
    const PromptSpec spec = build_p2p_prompt(seed_persona());
    CHECK(spec.rendered.find("a nurse at a children's hospital") != std::string::npos);
    CHECK(spec.rendered.find("in close relationship with") != std::string::npos);
    CHECK(spec.rendered.find("\"relation\"") != std::string::npos);
    CHECK(spec.rendered.find("\"description\"") != std::string::npos);
}

TEST_CASE("p2p prompt stays well-formed for descriptions with quotes and braces") {
    const PromptSpec spec =
        build_p2p_prompt(seed_persona(R"(a "quoted" persona {with braces} and \backslashes)"));
    // the JSON escaping keeps the prompt a valid single-line embed
    CHECK(spec.rendered.find("\\\"quoted\\\"") != std::string::npos);
    CHECK(spec.rendered.find("{with braces}") != std::string::npos);
}

TEST_CASE("parse_relations builds children and parallel edges") {
    const Persona parent = seed_persona();

    SUBCASE("single relation") {
        const auto parsed = parse_relations(
            R"([{"relation":"assistance relationship","description":"a beggar who relies on the shelter for meals"}])",
            parent, 1);
        REQUIRE(parsed.children.size() == 1);
        REQUIRE(parsed.edges.size() == 1);
        const auto* fp = std::get_if<FromPersona>(&parsed.children[0].provenance);
        REQUIRE(fp != nullptr);
        CHECK(fp->parent_id == parent.id);
        CHECK(fp->relation_label == "assistance relationship");
        CHECK(fp->depth == 1);
        CHECK(parsed.edges[0].parent_id == parent.id);
        CHECK(parsed.edges[0].child_id == parsed.children[0].id);
        CHECK(parsed.edges[0].iteration == 1);
    }
    SUBCASE("empty array") {
        const auto parsed = parse_relations("[]", parent, 1);
        CHECK(parsed.children.empty());
        CHECK(parsed.edges.empty());
    }
    SUBCASE("missing relation key") {
        CHECK_THROWS_AS((void)parse_relations(R"([{"description":"a person"}])", parent, 1),
                        MalformedResponse);
    }
    SUBCASE("not json") {
        CHECK_THROWS_AS((void)parse_relations("who knows", parent, 1), MalformedResponse);
    }
    SUBCASE("iteration must be positive") {
        CHECK_THROWS_AS((void)parse_relations("[]", parent, 0), std::invalid_argument);
    }
}

TEST_CASE("expansion arithmetic: fanout 2, one iteration") {
    MockBackend backend(2);
    ExpandOptions opts;
    opts.iterations = 1;
    opts.fanout_cap = 5;
    const ExpandResult r = expand_graph({seed_persona()}, opts, backend);
    CHECK(r.graph.nodes.size() == 3);
    CHECK(r.graph.edges.size() == 2);
    CHECK(check_graph(r.graph).empty());
}

TEST_CASE("expansion arithmetic: chain of 7 at fanout 1") {
    MockBackend backend(1);
    ExpandOptions opts;
    opts.iterations = 6;
    const ExpandResult r = expand_graph({seed_persona()}, opts, backend);
    CHECK(r.graph.nodes.size() == 7);
    CHECK(r.graph.edges.size() == 6);
    int max_iteration = 0;
    for (const auto& e : r.graph.edges) max_iteration = std::max(max_iteration, e.iteration);
    CHECK(max_iteration == 6);
}

TEST_CASE("default option values match the expansion scheme") {
    CHECK(ExpandOptions{}.iterations == 6);
    CHECK(ExpandOptions{}.fanout_cap == 5);
    CHECK(kDefaultMaxIterations == 6);
}

TEST_CASE("full binary expansion: 2^7 - 1 nodes over six iterations") {
    MockBackend backend(2);
    ExpandOptions opts; // defaults: iterations 6
    opts.fanout_cap = 2;
    const ExpandResult r = expand_graph({seed_persona()}, opts, backend);
    CHECK(r.graph.nodes.size() == 127);
    CHECK(r.graph.edges.size() == 126);
    CHECK(r.skips.empty());
    CHECK(check_graph(r.graph).empty());

    // node count bound: |seeds| * sum fanout^i; max edge iteration <= 6
    CHECK(r.graph.nodes.size() <= 1 + 2 + 4 + 8 + 16 + 32 + 64);
    for (const auto& e : r.graph.edges) CHECK(e.iteration <= opts.iterations);
}

TEST_CASE("fanout cap truncates children") {
    MockBackend backend(5); // mock offers 5 relations
    ExpandOptions opts;
    opts.iterations = 1;
    opts.fanout_cap = 3;
    const ExpandResult r = expand_graph({seed_persona()}, opts, backend);
    CHECK(r.graph.nodes.size() == 4); // seed + capped children
}

namespace {

// Always returns the same two children regardless of parent, forcing
// duplicate collapse from the second expansion on.
class ConstantChildren : public ChatBackend {
public:
    Completion complete(const std::string&, const DecodingParams&) override {
        return {R"([{"relation":"friendship","description":"a fixed first friend"},)"
                R"({"relation":"co-worker relationship","description":"a fixed second friend"}])",
                0, 0, 1, label()};
    }
    std::string label() const override { return "constant"; }
};

} // namespace

TEST_CASE("exact-duplicate descriptions collapse to one node") {
    ConstantChildren backend;
    ExpandOptions opts;
    opts.iterations = 3;
    opts.fanout_cap = 5;
    const ExpandResult r = expand_graph({seed_persona()}, opts, backend);
    // seed + the two fixed children; deeper iterations only rediscover them
    CHECK(r.graph.nodes.size() == 3);
    std::set<std::string> descriptions;
    for (const auto& n : r.graph.nodes) descriptions.insert(n.description);
    CHECK(descriptions.size() == r.graph.nodes.size());
    CHECK(check_graph(r.graph).empty()); // acyclic even with collapsing
}

TEST_CASE("expansion is deterministic and parallel-safe") {
    MockBackend backend(2);
    ExpandOptions sequential;
    sequential.iterations = 4;
    sequential.fanout_cap = 2;
    ExpandOptions parallel = sequential;
    parallel.max_concurrency = 8;

    const auto a = expand_graph({seed_persona()}, sequential, backend);
    const auto b = expand_graph({seed_persona()}, parallel, backend);
    CHECK(a.graph == b.graph);
}

TEST_CASE("check_graph flags dangling edges and bad iterations") {
    PersonaGraph g;
    g.nodes.push_back(seed_persona());
    g.edges.push_back(RelationEdge{g.nodes[0].id, "missing-node", "friendship", 1});
    g.edges.push_back(RelationEdge{g.nodes[0].id, g.nodes[0].id, "self", 9});
    const auto problems = check_graph(g, 6);
    CHECK(problems.size() >= 2);
}
