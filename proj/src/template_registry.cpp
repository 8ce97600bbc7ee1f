#include "pforge/template_registry.hpp"

#include <fstream>
#include <sstream>

#include "pforge/errors.hpp"

namespace pforge {

const std::vector<std::string>& TemplateRegistry::base_scenarios() {
    static const std::vector<std::string> ids = {"math",           "logic",      "ruozhiba",
                                                 "instruction",    "knowledge_text", "npc",
                                                 "tool_schema",    "tool_impl"};
    return ids;
}

TemplateRegistry TemplateRegistry::load_dir(const std::filesystem::path& dir) {
    TemplateRegistry reg;
    for (const auto& id : base_scenarios()) {
        const auto path = dir / (id + ".txt");
        std::ifstream in(path);
        if (!in) throw ConfigError("missing scenario template: " + path.string());
        std::stringstream buf;
        buf << in.rdbuf();
        reg.templates_[id] = ScenarioTemplate{id, buf.str()};
    }
    return reg;
}

std::vector<std::string> TemplateRegistry::list() const {
    std::vector<std::string> out;
    for (const auto& id : base_scenarios()) {
        if (templates_.count(id)) out.push_back(id);
    }
    return out;
}

const ScenarioTemplate& TemplateRegistry::get(const std::string& scenario_id) const {
    const auto it = templates_.find(scenario_id);
    if (it == templates_.end()) throw UnknownScenario("no template for scenario: " + scenario_id);
    return it->second;
}

namespace {

bool slot_name_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
}

// "?key rest" / "!key rest" conditional prefix, if any.
struct Conditional {
    bool present = false;
    bool want_key = true;
    std::string key;
    std::size_t rest_at = 0;
};

Conditional parse_conditional(const std::string& line) {
    Conditional c;
    if (line.empty() || (line[0] != '?' && line[0] != '!')) return c;
    std::size_t i = 1;
    while (i < line.size() && slot_name_char(line[i])) ++i;
    if (i == 1 || i >= line.size() || line[i] != ' ') return c;
    c.present = true;
    c.want_key = line[0] == '?';
    c.key = line.substr(1, i - 1);
    c.rest_at = i + 1;
    return c;
}

} // namespace

std::string render_template(const std::string& body,
                            const std::map<std::string, std::string>& slots) {
    // Conditional lines first.
    std::string kept;
    std::istringstream lines(body);
    std::string line;
    bool first = true;
    while (std::getline(lines, line)) {
        const Conditional c = parse_conditional(line);
        if (c.present) {
            const bool have = slots.count(c.key) > 0;
            if (have != c.want_key) continue;
            line = line.substr(c.rest_at);
        }
        if (!first) kept += '\n';
        kept += line;
        first = false;
    }
    if (!body.empty() && body.back() == '\n') kept += '\n';

    // Single-pass slot substitution; substituted values are not re-scanned.
    std::string out;
    out.reserve(kept.size());
    std::size_t i = 0;
    while (i < kept.size()) {
        if (kept[i] != '{') {
            out.push_back(kept[i++]);
            continue;
        }
        std::size_t j = i + 1;
        while (j < kept.size() && slot_name_char(kept[j])) ++j;
        if (j > i + 1 && j < kept.size() && kept[j] == '}') {
            const std::string name = kept.substr(i + 1, j - i - 1);
            const auto it = slots.find(name);
            if (it == slots.end()) {
                throw MissingModifier("unresolved template slot {" + name + "}");
            }
            out += it->second;
            i = j + 1;
        } else {
            out.push_back(kept[i++]);
        }
    }
    return out;
}

} // namespace pforge
