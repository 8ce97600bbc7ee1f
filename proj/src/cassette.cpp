#include "pforge/cassette.hpp"

#include <fstream>

#include "pforge/errors.hpp"
#include "pforge/json_io.hpp"
#include "pforge/stable_hash.hpp"

namespace pforge {

void to_json(nlohmann::json& j, const CassetteEntry& e) {
    j = nlohmann::json{
        {"key", e.key}, {"prompt", e.prompt}, {"decoding", e.decoding}, {"response", e.response}};
}

void from_json(const nlohmann::json& j, CassetteEntry& e) {
    j.at("key").get_to(e.key);
    j.at("prompt").get_to(e.prompt);
    j.at("decoding").get_to(e.decoding);
    j.at("response").get_to(e.response);
}

std::string cassette_key(const std::string& prompt, const DecodingParams& decoding) {
    nlohmann::json d = decoding; // object keys are emitted sorted, so this is canonical
    return to_hex16(stable_hash64(prompt + "\x1f" + d.dump()));
}

ReplayBackend::ReplayBackend(const std::filesystem::path& cassette_path, int max_concurrency)
    : gate_(max_concurrency) {
    for (const auto& e : read_jsonl<CassetteEntry>(cassette_path)) {
        entries_[e.key] = e;
    }
}

Completion ReplayBackend::complete(const std::string& prompt, const DecodingParams& decoding) {
    ConcurrencyGate::Pass pass(gate_);
    const std::string key = cassette_key(prompt, decoding);
    const auto it = entries_.find(key);
    if (it == entries_.end()) {
        throw CassetteMiss("no cassette entry for key " + key);
    }
    Completion c;
    c.text = it->second.response;
    c.producer = label();
    return c;
}

RecordingBackend::RecordingBackend(std::shared_ptr<ChatBackend> inner,
                                   const std::filesystem::path& cassette_path)
    : inner_(std::move(inner)), path_(cassette_path) {}

Completion RecordingBackend::complete(const std::string& prompt, const DecodingParams& decoding) {
    Completion c = inner_->complete(prompt, decoding);
    CassetteEntry e{cassette_key(prompt, decoding), prompt, decoding, c.text};
    std::lock_guard lk(mu_);
    append_cassette_entry(path_, e);
    return c;
}

void append_cassette_entry(const std::filesystem::path& path, const CassetteEntry& entry) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::app);
    if (!out) throw DataError("cannot open cassette for append: " + path.string());
    nlohmann::json j = entry;
    out << j.dump() << '\n';
}

} // namespace pforge
