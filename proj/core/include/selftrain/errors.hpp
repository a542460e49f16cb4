#pragma once

#include <stdexcept>

namespace selftrain {

// Error categories surfaced by the CLI as distinct exit codes.
// Contract violations that indicate a programming error (bad dimensions,
// out-of-range arguments) throw std::invalid_argument instead.

/// Malformed or inconsistent run configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Unreadable, truncated or inconsistent input data.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Optimization produced a non-finite loss.
class TrainingDivergence : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace selftrain
