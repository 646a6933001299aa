#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kddsp {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed textual input; carries the 1-based line when known (0 otherwise).
class ParseError : public Error {
public:
    ParseError(const std::string &what, std::size_t line = 0)
        : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Input is well-formed but unusable (e.g. an empty graph).
class InputError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration or precondition violation by the caller.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Container sizes that must agree do not.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// NaN/Inf or otherwise numerically unusable values.
class NumericError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

/// A guidance parameter lies outside (0,1).
class RangeError : public ValidationError {
public:
    RangeError(const std::string &parameter, double value)
        : ValidationError(parameter + " = " + std::to_string(value) + " is outside (0,1)"),
          parameter_(parameter), value_(value) {}
    const std::string &parameter() const noexcept { return parameter_; }
    double value() const noexcept { return value_; }

private:
    std::string parameter_;
    double value_;
};

/// The alpha weights do not sum to one within tolerance.
class SumError : public ValidationError {
public:
    explicit SumError(double sum)
        : ValidationError("alpha values sum to " + std::to_string(sum) + ", expected 1"), sum_(sum) {}
    double sum() const noexcept { return sum_; }

private:
    double sum_;
};

/// Pearson correlation requested for a constant series.
class UndefinedCorrelation : public Error {
public:
    using Error::Error;
};

}  // namespace kddsp
