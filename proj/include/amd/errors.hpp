#pragma once

#include <stdexcept>
#include <string>

namespace amd {

// Error taxonomy shared across the library. The CLI maps these onto
// process exit codes, so new failure modes should reuse one of the
// categories below instead of throwing std::runtime_error directly.

// Bad hyper-parameter or option value.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor shape / dimension mismatch.
struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or truncated file, dataset capacity problems.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Operation invoked on an object in the wrong state (e.g. missing weights).
struct StateError : std::runtime_error {
    explicit StateError(const std::string& msg) : std::runtime_error(msg) {}
};

// Zero-norm feature where a normalized distance is required.
struct DegenerateFeatureError : std::runtime_error {
    explicit DegenerateFeatureError(const std::string& msg) : std::runtime_error(msg) {}
};

// API misuse (non-scalar backward seed, out-of-range epoch, ...).
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invariant violation inside the library itself.
struct InternalError : std::runtime_error {
    explicit InternalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace amd
