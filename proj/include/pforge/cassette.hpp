#pragma once
// Record/replay store for backend completions. Entries are keyed by a
// stable hash of (prompt, decoding), stored as JSONL, so integration
// tests replay real provider traffic without network access.

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>

#include "pforge/backend.hpp"

namespace pforge {

struct CassetteEntry {
    std::string key;
    std::string prompt;
    DecodingParams decoding;
    std::string response;
};

void to_json(nlohmann::json& j, const CassetteEntry& e);
void from_json(const nlohmann::json& j, CassetteEntry& e);

std::string cassette_key(const std::string& prompt, const DecodingParams& decoding);

// Serves completions from a cassette file; performs no network I/O.
// Missing entries raise CassetteMiss.
class ReplayBackend : public ChatBackend {
public:
    explicit ReplayBackend(const std::filesystem::path& cassette_path, int max_concurrency = 4);

    Completion complete(const std::string& prompt, const DecodingParams& decoding) override;
    std::string label() const override { return "replay"; }
    std::size_t size() const { return entries_.size(); }

private:
    std::map<std::string, CassetteEntry> entries_;
    ConcurrencyGate gate_;
};

// Passes through to an inner backend and appends every exchange to the
// cassette file.
class RecordingBackend : public ChatBackend {
public:
    RecordingBackend(std::shared_ptr<ChatBackend> inner, const std::filesystem::path& cassette_path);

    Completion complete(const std::string& prompt, const DecodingParams& decoding) override;
    std::string label() const override { return inner_->label(); }

private:
    std::shared_ptr<ChatBackend> inner_;
    std::filesystem::path path_;
    std::mutex mu_;
};

void append_cassette_entry(const std::filesystem::path& path, const CassetteEntry& entry);

} // namespace pforge
