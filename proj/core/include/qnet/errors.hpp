#pragma once

#include <stdexcept>
#include <string>

namespace qnet {

/// Base class for all qnet domain errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A network description file could not be parsed or failed validation.
/// The message is line-anchored: "file:line: element: problem".
class ConfigError : public Error {
public:
    using Error::Error;
};

/// The routing matrix does not describe an open network (the traffic
/// linear system is singular).
class SingularRoutingError : public Error {
public:
    using Error::Error;
};

/// A FCFS node was given class-dependent service rates.
class ClassMismatchError : public Error {
public:
    using Error::Error;
};

/// A service rate was zero or negative where a positive rate is required.
class NonPositiveServiceRateError : public Error {
public:
    using Error::Error;
};

/// An operation that requires a stable queue was invoked with offered
/// load at or beyond capacity.
class UnstableError : public Error {
public:
    using Error::Error;
};

/// Capacity allocation budget does not exceed the total arrival rate.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

/// The numerical verification oracle found a feasible point that beats
/// a solution claimed optimal.
class OracleViolationError : public Error {
public:
    using Error::Error;
};

/// Analytic metrics and simulation config were built from different specs.
class SpecMismatchError : public Error {
public:
    using Error::Error;
};

/// Requested more job classes than the operation supports.
class MultiClassNotSupportedError : public Error {
public:
    using Error::Error;
};

} // namespace qnet
