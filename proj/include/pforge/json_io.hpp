#pragma once
// JSON (de)serialization and JSONL flat-file store.
//
// External format: one UTF-8 JSON record per line, field names exactly
// as in the type definitions (lower_snake_case). decode(encode(x)) == x
// for every valid record.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pforge/errors.hpp"
#include "pforge/types.hpp"

namespace pforge {

using json = nlohmann::json;

void to_json(json& j, const SourceText& t);
void from_json(const json& j, SourceText& t);

void to_json(json& j, const MinHashSignature& s);
void from_json(const json& j, MinHashSignature& s);

void to_json(json& j, const Persona& p);
void from_json(const json& j, Persona& p);

void to_json(json& j, const RelationEdge& e);
void from_json(const json& j, RelationEdge& e);

void to_json(json& j, const Solution& s);
void from_json(const json& j, Solution& s);

void to_json(json& j, const SynthesisItem& it);
void from_json(const json& j, SynthesisItem& it);

json provenance_to_json(const Provenance& p);
Provenance provenance_from_json(const json& j);

// --- JSONL -----------------------------------------------------------------

// Appends one record per line; flush() defines the committed prefix a
// checkpoint may point at.
class JsonlWriter {
public:
    explicit JsonlWriter(const std::filesystem::path& path, bool append = false);

    template <class T>
    void write(const T& record) {
        json j = record;
        write_line(j.dump());
    }

    void write_line(const std::string& line);
    void flush();
    std::size_t records_written() const { return records_; }
    std::uint64_t bytes_written() const { return bytes_; }

private:
    std::ofstream out_;
    std::size_t records_ = 0;
    std::uint64_t bytes_ = 0;
};

std::vector<std::string> read_lines(const std::filesystem::path& path);

// Throws CorruptRecord with the 1-based line number on any bad line.
template <class T>
std::vector<T> read_jsonl(const std::filesystem::path& path) {
    std::vector<T> out;
    std::size_t line_no = 0;
    for (const auto& line : read_lines(path)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            out.push_back(json::parse(line).get<T>());
        } catch (const std::exception& e) {
            throw CorruptRecord(path.string(), line_no, e.what());
        }
    }
    return out;
}

template <class T>
void write_jsonl(const std::filesystem::path& path, const std::vector<T>& records) {
    JsonlWriter w(path);
    for (const auto& r : records) w.write(r);
    w.flush();
}

} // namespace pforge
