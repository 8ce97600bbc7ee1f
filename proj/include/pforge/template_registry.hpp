#pragma once
// Scenario templates are editable data files, one per scenario, with
// {slot} placeholders. Lines starting with "?key " render only when the
// modifier `key` is present; "!key " only when it is absent.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace pforge {

struct ScenarioTemplate {
    std::string id;
    std::string body;
};

class TemplateRegistry {
public:
    // Loads <scenario>.txt for every base scenario from dir; all eight
    // must exist.
    static TemplateRegistry load_dir(const std::filesystem::path& dir);

    // Base scenario ids, in registry order.
    static const std::vector<std::string>& base_scenarios();

    std::vector<std::string> list() const;
    const ScenarioTemplate& get(const std::string& scenario_id) const; // UnknownScenario

private:
    std::map<std::string, ScenarioTemplate> templates_;
};

// Applies conditional lines and substitutes slots in one pass (values are
// never re-scanned, so braces inside values are inert). Unresolved slots
// raise MissingModifier.
std::string render_template(const std::string& body,
                            const std::map<std::string, std::string>& slots);

} // namespace pforge
