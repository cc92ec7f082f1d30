#ifndef GSAGCN_ERRORS_HPP
#define GSAGCN_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gsagcn {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand dimensions do not agree.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Input violates an operation's precondition (asymmetric matrix, bad id, ...).
class InputError : public Error {
public:
    using Error::Error;
};

/// Out-of-range configuration value.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Cholesky factorization met a non-positive pivot.
class SingularityError : public Error {
public:
    SingularityError(const std::string& what, std::size_t pivot)
        : Error(what), pivot_(pivot) {}
    std::size_t pivot() const noexcept { return pivot_; }

private:
    std::size_t pivot_;
};

/// Operation needs a connected graph.
class ConnectivityError : public Error {
public:
    using Error::Error;
};

/// Malformed text input; carries the 1-based line number.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Structurally inconsistent file contents (e.g. ragged feature rows).
class FormatError : public Error {
public:
    using Error::Error;
};

/// A theoretical assumption (full column rank, ...) does not hold for the input.
class AssumptionViolation : public Error {
public:
    using Error::Error;
};

/// Cache and parameters were not produced by the same forward call.
class ConsistencyError : public Error {
public:
    using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, std::size_t epoch)
        : Error(what), epoch_(epoch) {}
    std::size_t epoch() const noexcept { return epoch_; }

private:
    std::size_t epoch_;
};

}  // namespace gsagcn

#endif  // GSAGCN_ERRORS_HPP
