#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pforge {

// Exit codes used by the CLI.
enum class ExitCode : int { ok = 0, config_error = 2, backend_fatal = 3, data_corruption = 4 };

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad configuration, unknown keys, missing files. CLI exit 2.
struct ConfigError : Error {
    using Error::Error;
};

// Fatal backend conditions. CLI exit 3.
struct BackendError : Error {
    using Error::Error;
};
struct AuthError : BackendError {
    using BackendError::BackendError;
};
struct RateLimitedExhausted : BackendError {
    using BackendError::BackendError;
};
struct TimeoutError : BackendError {
    using BackendError::BackendError;
};
struct CassetteMiss : BackendError {
    using BackendError::BackendError;
};
struct JudgeUnavailable : BackendError {
    using BackendError::BackendError;
};

// Corrupt stored data. CLI exit 4.
struct DataError : Error {
    using Error::Error;
};
struct CorruptRecord : DataError {
    CorruptRecord(const std::string& path, std::size_t line, const std::string& what)
        : DataError(path + ":" + std::to_string(line) + ": " + what), line_number(line) {}
    std::size_t line_number;
};

// Recoverable per-record conditions.
struct MalformedResponse : Error {
    using Error::Error;
};
struct TextTooLong : Error {
    using Error::Error;
};
struct IncompatibleSignatures : Error {
    using Error::Error;
};
struct DimensionMismatch : Error {
    using Error::Error;
};
struct ZeroNormEmbedding : Error {
    using Error::Error;
};
struct UnknownScenario : Error {
    using Error::Error;
};
struct MissingModifier : Error {
    using Error::Error;
};
struct DemoPersonaMissing : Error {
    using Error::Error;
};
struct InsufficientPairs : Error {
    using Error::Error;
};

} // namespace pforge
