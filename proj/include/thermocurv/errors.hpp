#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace thermocurv {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A value left the domain of an elementary function or of a potential.
class DomainError : public Error {
public:
    DomainError(std::string function, double value)
        : Error(function + ": argument " + std::to_string(value) + " outside domain"),
          function_(std::move(function)),
          value_(value) {}

    DomainError(const std::string& what, std::string function, double value)
        : Error(what), function_(std::move(function)), value_(value) {}

    const std::string& function() const noexcept { return function_; }
    double value() const noexcept { return value_; }

private:
    std::string function_;
    double value_;
};

class DivisionByZero : public DomainError {
public:
    explicit DivisionByZero(double denominator)
        : DomainError("division by value " + std::to_string(denominator) + " below floor", "/",
                      denominator) {}
};

enum class ParseErrorKind { lexical, syntax, unknown_identifier, schema };

/// Parse failure carrying a 0-based character offset into the source text.
class ParseError : public Error {
public:
    ParseError(ParseErrorKind kind, std::size_t position, const std::string& message)
        : Error(describe(kind) + " at position " + std::to_string(position) + ": " + message),
          kind_(kind),
          position_(position) {}

    ParseErrorKind kind() const noexcept { return kind_; }
    std::size_t position() const noexcept { return position_; }

private:
    static std::string describe(ParseErrorKind kind) {
        switch (kind) {
        case ParseErrorKind::lexical: return "lexical error";
        case ParseErrorKind::syntax: return "syntax error";
        case ParseErrorKind::unknown_identifier: return "unknown identifier";
        case ParseErrorKind::schema: return "schema error";
        }
        return "parse error";
    }

    ParseErrorKind kind_;
    std::size_t position_;
};

/// Metric determinant vanished where a curvature was requested.
class SingularMetricError : public Error {
public:
    using Error::Error;
};

/// Root finder could not bracket or converge.
class SolverError : public Error {
public:
    enum class Reason { no_bracket, no_convergence, singular, tolerance_not_met };

    SolverError(Reason reason, const std::string& message) : Error(message), reason_(reason) {}

    Reason reason() const noexcept { return reason_; }

private:
    Reason reason_;
};

}  // namespace thermocurv
