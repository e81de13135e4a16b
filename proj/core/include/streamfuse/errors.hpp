#pragma once

#include <stdexcept>
#include <string>

namespace streamfuse {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when a vector/matrix does not have the dimension a contract requires.
class DimensionError : public Error {
public:
    DimensionError(const std::string& context, long expected, long actual)
        : Error(context + ": expected dimension " + std::to_string(expected) +
                ", got " + std::to_string(actual)),
          expected_(expected),
          actual_(actual) {}

    long expected() const noexcept { return expected_; }
    long actual() const noexcept { return actual_; }

private:
    long expected_;
    long actual_;
};

/// Raised when a matrix that must be symmetric positive definite is not.
class NotPositiveDefiniteError : public Error {
public:
    explicit NotPositiveDefiniteError(const std::string& context)
        : Error(context + ": matrix is not symmetric positive definite") {}
};

/// Raised on malformed input files (CSV, model files, configs).
class ParseError : public Error {
public:
    using Error::Error;
};

}  // namespace streamfuse
