#pragma once

#include <stdexcept>
#include <string>

namespace qconn {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad input from the user: malformed JSON, unknown preset, wrong sizes.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Anything that goes wrong inside the numerics.
class NumericalError : public Error {
public:
    using Error::Error;
};

class EigenSolverError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class SpectrumDomainError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class DegeneracyError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ContinuationLostError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class InversionError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class DegenerateMetricError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ConvergenceError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ConsistencyError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace qconn
