#pragma once

#include <stdexcept>
#include <string>

namespace cournot {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Unusable configuration (bad fields, missing files, invalid ranges).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Mathematical precondition violated (convexity lost, leaf queried for
/// children, singular stage pivot, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Malformed data structure (tree invariants, missing node actions).
/// Messages name the offending node where one exists.
class StructuralError : public Error {
public:
    using Error::Error;
};

/// A configured size cap was exceeded.
class SizeError : public Error {
public:
    using Error::Error;
};

/// Iterative procedure failed to converge within its budget.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace cournot
