#pragma once

#include <stdexcept>
#include <string>

namespace dncim {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration or user input. The CLI maps this to exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Numerical failures. The CLI maps these to exit code 3.
class NumericalError : public Error {
public:
    using Error::Error;
};

class NonMonotoneQuantile : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class QuadratureFailure : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class OptimFailure : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NotPositiveDefinite : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class SingularInformation : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class SimulationBudgetExceeded : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class UnsupportedModel : public Error {
public:
    using Error::Error;
};

class EmptyHypothesis : public Error {
public:
    using Error::Error;
};

} // namespace dncim
