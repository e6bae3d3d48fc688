#pragma once

#include <stdexcept>
#include <string>

namespace fracle {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid input, poles, out-of-range parameters.
struct DomainError : Error {
    using Error::Error;
};

// Caller broke an operation's contract (missing tails, bad sizes).
struct ContractViolation : Error {
    using Error::Error;
};

struct NumericalError : Error {
    using Error::Error;
};

struct ConditioningError : NumericalError {
    using NumericalError::NumericalError;
};

struct CalibrationError : NumericalError {
    using NumericalError::NumericalError;
};

struct ContinuationError : NumericalError {
    using NumericalError::NumericalError;
};

struct SolvabilityError : NumericalError {
    using NumericalError::NumericalError;
};

struct PreconditionError : DomainError {
    using DomainError::DomainError;
};

} // namespace fracle
