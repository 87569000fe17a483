#pragma once

#include <stdexcept>
#include <string>

namespace qsm {

/// Bad arguments, mismatched shapes, malformed files. Maps to CLI exit code 1.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Divergence or non-finite values during a solve. Maps to CLI exit code 2.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// NIfTI header or payload problems.
class FormatError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) throw ValidationError(message);
}

} // namespace qsm
