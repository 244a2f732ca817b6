#pragma once

#include <stdexcept>
#include <string>

namespace hmmrates {

// Base of every error the library throws. The CLI maps the subclasses onto
// its exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input text (CSV/JSON). Carries the 1-based line when known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, long line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    long line() const noexcept { return line_; }

private:
    long line_;
};

// Well-formed input that violates a data invariant (N > E, duplicate keys, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

// Argument outside the domain of a function (age out of range, non-finite state).
class DomainError : public Error {
public:
    using Error::Error;
};

// Inconsistent request: wrong basis kind for a cell, bad parameters, too few periods.
class UsageError : public Error {
public:
    using Error::Error;
};

// Numerical breakdown: weight underflow, repeated covariance repair failure.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace hmmrates
