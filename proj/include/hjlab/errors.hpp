#pragma once

#include <stdexcept>
#include <string>

namespace hjlab {

// Error taxonomy mirrors the CLI exit codes: config 2, numeric 3, stats 4.

/// Bad configuration, precondition violation, or malformed input.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Numeric failure at runtime (overflow, resolution loss, degenerate data).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Not enough samples/events to produce a statistically meaningful result.
struct InsufficientStatistics : std::runtime_error {
    explicit InsufficientStatistics(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hjlab
