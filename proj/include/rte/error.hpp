#pragma once

#include <stdexcept>
#include <string>

namespace rte {

/// Raised when an input violates a documented precondition or invariant
/// (invalid distribution, too-short series, mismatched lengths, ...).
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical procedure fails to converge.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool condition, const std::string& message)
{
    if (!condition) throw ValidationError(message);
}

} // namespace detail
} // namespace rte
