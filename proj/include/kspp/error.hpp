#pragma once

#include <stdexcept>
#include <string>

namespace kspp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input files (molecule configs, sequences, fixtures).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Arguments that violate an operation's preconditions.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A numerical postcondition failed (non-unitary gate, residual too large, ...).
class NumericalError : public Error {
public:
    using Error::Error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
    if (!ok) throw ValidationError(what);
}

} // namespace detail
} // namespace kspp
