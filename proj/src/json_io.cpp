#include "pforge/json_io.hpp"

namespace pforge {

void to_json(json& j, const SourceText& t) {
    j = json{{"id", t.id}, {"text", t.text}, {"source_tag", t.source_tag}, {"lang", t.lang}};
}

void from_json(const json& j, SourceText& t) {
    j.at("id").get_to(t.id);
    j.at("text").get_to(t.text);
    t.source_tag = j.value("source_tag", "");
    t.lang = j.value("lang", "en");
}

void to_json(json& j, const MinHashSignature& s) {
    j = json{{"values", s.values}, {"k", s.k}, {"seed", s.seed}};
}

void from_json(const json& j, MinHashSignature& s) {
    j.at("values").get_to(s.values);
    j.at("k").get_to(s.k);
    j.at("seed").get_to(s.seed);
}

json provenance_to_json(const Provenance& p) {
    if (const auto* ft = std::get_if<FromText>(&p)) {
        return json{{"kind", "from_text"},
                    {"source_id", ft->source_id},
                    {"relation_word", ft->relation_word}};
    }
    if (const auto* fp = std::get_if<FromPersona>(&p)) {
        return json{{"kind", "from_persona"},
                    {"parent_id", fp->parent_id},
                    {"relation_label", fp->relation_label},
                    {"depth", fp->depth}};
    }
    return json{{"kind", "manual"}};
}

Provenance provenance_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "from_text") {
        return FromText{j.at("source_id").get<std::string>(),
                        j.at("relation_word").get<std::string>()};
    }
    if (kind == "from_persona") {
        return FromPersona{j.at("parent_id").get<std::string>(),
                           j.at("relation_label").get<std::string>(), j.at("depth").get<int>()};
    }
    if (kind == "manual") return Manual{};
    throw std::invalid_argument("unknown provenance kind: " + kind);
}

void to_json(json& j, const Persona& p) {
    j = json{{"id", p.id},
             {"description", p.description},
             {"granularity", to_string(p.granularity)},
             {"provenance", provenance_to_json(p.provenance)}};
    if (p.embedding) j["embedding"] = *p.embedding;
    if (p.signature) j["signature"] = *p.signature;
}

void from_json(const json& j, Persona& p) {
    j.at("id").get_to(p.id);
    j.at("description").get_to(p.description);
    p.granularity = granularity_from_string(j.at("granularity").get<std::string>());
    p.provenance = provenance_from_json(j.at("provenance"));
    p.embedding.reset();
    p.signature.reset();
    if (j.contains("embedding")) p.embedding = j.at("embedding").get<std::vector<float>>();
    if (j.contains("signature")) p.signature = j.at("signature").get<MinHashSignature>();
}

void to_json(json& j, const RelationEdge& e) {
    j = json{{"parent_id", e.parent_id},
             {"child_id", e.child_id},
             {"relation_label", e.relation_label},
             {"iteration", e.iteration}};
}

void from_json(const json& j, RelationEdge& e) {
    j.at("parent_id").get_to(e.parent_id);
    j.at("child_id").get_to(e.child_id);
    j.at("relation_label").get_to(e.relation_label);
    j.at("iteration").get_to(e.iteration);
}

void to_json(json& j, const Solution& s) {
    j = json{{"producer", s.producer}, {"answer", s.answer}, {"full_text", s.full_text}};
}

void from_json(const json& j, Solution& s) {
    j.at("producer").get_to(s.producer);
    j.at("answer").get_to(s.answer);
    j.at("full_text").get_to(s.full_text);
}

void to_json(json& j, const SynthesisItem& it) {
    j = json{{"id", it.id},
             {"scenario", to_string(it.scenario)},
             {"persona_id", it.persona_id},
             {"prompt_text", it.prompt_text},
             {"output_text", it.output_text},
             {"solutions", it.solutions},
             {"meta", it.meta}};
}

void from_json(const json& j, SynthesisItem& it) {
    j.at("id").get_to(it.id);
    it.scenario = scenario_from_string(j.at("scenario").get<std::string>());
    j.at("persona_id").get_to(it.persona_id);
    j.at("prompt_text").get_to(it.prompt_text);
    j.at("output_text").get_to(it.output_text);
    j.at("solutions").get_to(it.solutions);
    it.meta = j.value("meta", std::map<std::string, std::string>{});
}

JsonlWriter::JsonlWriter(const std::filesystem::path& path, bool append) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out_.open(path, append ? std::ios::app : std::ios::trunc);
    if (!out_) throw DataError("cannot open for writing: " + path.string());
}

void JsonlWriter::write_line(const std::string& line) {
    out_ << line << '\n';
    if (!out_) throw DataError("write failed");
    ++records_;
    bytes_ += line.size() + 1;
}

void JsonlWriter::flush() {
    out_.flush();
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open for reading: " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

} // namespace pforge
