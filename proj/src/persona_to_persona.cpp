#include "pforge/persona_to_persona.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "pforge/errors.hpp"

namespace pforge {

using nlohmann::json;

PromptSpec build_p2p_prompt(const Persona& p) {
    const json quoted = p.description; // JSON-escapes quotes and braces
    std::string prompt = "Given persona: " + quoted.dump() +
                         "\n\n"
                         "Who is in close relationship with the given persona?\n"
                         "List several such people. For each one, name the relationship and "
                         "describe the person in one or two sentences.\n"
                         "Respond with only a JSON array of objects, each with keys "
                         "\"relation\" and \"description\".";
    PromptSpec spec;
    spec.mode = PromptMode::zero_shot;
    spec.scenario = "persona_to_persona";
    spec.persona = p;
    spec.rendered = std::move(prompt);
    return spec;
}

namespace {

std::string strip_fences(const std::string& raw) {
    const auto first = raw.find("```");
    if (first == std::string::npos) return raw;
    auto begin = raw.find('\n', first);
    if (begin == std::string::npos) return raw;
    ++begin;
    const auto last = raw.rfind("```");
    if (last <= begin) return raw;
    return raw.substr(begin, last - begin);
}

} // namespace

ParsedRelations parse_relations(const std::string& raw, const Persona& parent, int iteration) {
    if (iteration < 1) throw std::invalid_argument("iteration must be >= 1");
    json arr;
    try {
        arr = json::parse(strip_fences(raw));
    } catch (const json::exception& e) {
        throw MalformedResponse(std::string("relation response is not JSON: ") + e.what());
    }
    if (!arr.is_array()) throw MalformedResponse("relation response is not a JSON array");

    ParsedRelations out;
    for (const auto& el : arr) {
        if (!el.is_object() || !el.contains("relation") || !el.contains("description")) {
            throw MalformedResponse("relation element missing \"relation\" or \"description\"");
        }
        Persona child;
        child.description = el.at("description").get<std::string>();
        child.granularity = parent.granularity;
        child.provenance = FromPersona{parent.id, el.at("relation").get<std::string>(), iteration};
        child.id = persona_id_for(child.description, child.provenance);
        out.edges.push_back(RelationEdge{parent.id, child.id,
                                         el.at("relation").get<std::string>(), iteration});
        out.children.push_back(std::move(child));
    }
    return out;
}

namespace {

struct FrontierResult {
    ParsedRelations parsed;
    std::optional<SkipRecord> skip;
};

FrontierResult expand_one(const Persona& parent, int iteration, const ExpandOptions& opts,
                          ChatBackend& backend) {
    FrontierResult r;
    try {
        const PromptSpec spec = build_p2p_prompt(parent);
        const Completion c = backend.complete(spec.rendered, opts.decoding);
        r.parsed = parse_relations(c.text, parent, iteration);
    } catch (const AuthError&) {
        throw;
    } catch (const RateLimitedExhausted&) {
        throw;
    } catch (const Error& e) {
        r.skip = SkipRecord{parent.id, "iteration " + std::to_string(iteration), e.what()};
    }
    return r;
}

} // namespace

ExpandResult expand_graph(const std::vector<Persona>& seeds, const ExpandOptions& opts,
                          ChatBackend& backend) {
    if (opts.iterations < 1) throw ConfigError("iterations must be >= 1");
    if (opts.fanout_cap < 1) throw ConfigError("fanout_cap must be >= 1");

    ExpandResult out;
    std::unordered_map<std::string, std::string> desc_to_id; // exact-duplicate collapse
    std::unordered_map<std::string, int> node_iteration;
    std::unordered_set<std::string> edge_keys;

    std::vector<Persona> frontier;
    for (const auto& seed : seeds) {
        if (desc_to_id.count(seed.description)) continue;
        desc_to_id[seed.description] = seed.id;
        node_iteration[seed.id] = 0;
        out.graph.nodes.push_back(seed);
        frontier.push_back(seed);
    }

    for (int iter = 1; iter <= opts.iterations && !frontier.empty(); ++iter) {
        std::vector<FrontierResult> results(frontier.size());
        const int workers =
            std::max(1, std::min<int>(opts.max_concurrency, static_cast<int>(frontier.size())));
        if (workers == 1) {
            for (std::size_t i = 0; i < frontier.size(); ++i) {
                results[i] = expand_one(frontier[i], iter, opts, backend);
            }
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
                        if (i >= frontier.size()) break;
                        try {
                            results[i] = expand_one(frontier[i], iter, opts, backend);
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

        // Single-writer graph assembly at the iteration barrier.
        std::vector<Persona> next_frontier;
        for (auto& r : results) {
            if (r.skip) {
                out.skips.push_back(std::move(*r.skip));
                continue;
            }
            const std::size_t take =
                std::min<std::size_t>(r.parsed.children.size(),
                                      static_cast<std::size_t>(opts.fanout_cap));
            for (std::size_t c = 0; c < take; ++c) {
                Persona& child = r.parsed.children[c];
                RelationEdge edge = r.parsed.edges[c];
                const auto known = desc_to_id.find(child.description);
                if (known == desc_to_id.end()) {
                    desc_to_id[child.description] = child.id;
                    node_iteration[child.id] = iter;
                    next_frontier.push_back(child);
                    out.graph.nodes.push_back(std::move(child));
                    out.graph.edges.push_back(std::move(edge));
                } else {
                    // Collapsed duplicate: keep the first node, and only
                    // point an edge at it when it sits on this iteration's
                    // level so from_persona edges stay acyclic.
                    if (node_iteration[known->second] == iter) {
                        edge.child_id = known->second;
                        const std::string key =
                            edge.parent_id + "\x1f" + edge.child_id + "\x1f" + edge.relation_label;
                        if (edge_keys.insert(key).second) {
                            out.graph.edges.push_back(std::move(edge));
                        }
                    }
                }
            }
        }
        frontier = std::move(next_frontier);
    }
    return out;
}

std::vector<std::string> check_graph(const PersonaGraph& g, int max_iterations) {
    std::vector<std::string> problems;
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) index[g.nodes[i].id] = i;

    std::unordered_map<std::string, std::vector<std::string>> children;
    for (const auto& e : g.edges) {
        if (!index.count(e.parent_id)) problems.push_back("edge parent missing: " + e.parent_id);
        if (!index.count(e.child_id)) problems.push_back("edge child missing: " + e.child_id);
        if (e.iteration < 1 || e.iteration > max_iterations) {
            problems.push_back("edge iteration out of range: " + std::to_string(e.iteration));
        }
        children[e.parent_id].push_back(e.child_id);
    }

    // Cycle check over from_persona edges (DFS, three colors).
    std::unordered_map<std::string, int> color;
    std::vector<std::pair<std::string, std::size_t>> stack;
    for (const auto& n : g.nodes) {
        if (color[n.id] != 0) continue;
        stack.push_back({n.id, 0});
        color[n.id] = 1;
        while (!stack.empty()) {
            auto& [id, next_child] = stack.back();
            const auto& kids = children[id];
            if (next_child < kids.size()) {
                const std::string& k = kids[next_child++];
                if (color[k] == 1) {
                    problems.push_back("cycle through " + k);
                } else if (color[k] == 0) {
                    color[k] = 1;
                    stack.push_back({k, 0});
                }
            } else {
                color[id] = 2;
                stack.pop_back();
            }
        }
    }
    return problems;
}

} // namespace pforge
