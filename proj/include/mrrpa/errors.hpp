#pragma once

#include <stdexcept>
#include <string>

namespace mrrpa {

/// Malformed input text (FCIDUMP, configuration).
struct ParseError : std::runtime_error {
    ParseError(const std::string &msg, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg
                                      : msg),
          line(line) {}
    int line;
};

/// A precondition on arguments was violated.
struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Problem too large for the dense solvers.
struct CapacityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Numerical breakdown: complex RPA frequencies, non-positive determinants,
/// quasi-degenerate reference states, singular amplitude matrices.
struct InstabilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace mrrpa
