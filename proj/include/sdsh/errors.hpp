#pragma once

#include <stdexcept>
#include <string>

namespace sdsh {

/// A model specification or configuration document is inconsistent.
class ConfigurationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A path or state would break a model invariant (e.g. spread below one tick).
class InvariantViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thinning exceeded its candidate budget; the configuration is likely explosive.
class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file. Carries the offending line when known.
class DataError : public std::runtime_error {
public:
    DataError(const std::string& what, long line = -1)
        : std::runtime_error(line >= 0 ? what + " (line " + std::to_string(line) + ")" : what),
          line_(line) {}

    [[nodiscard]] long line() const noexcept { return line_; }

private:
    long line_;
};

}  // namespace sdsh
