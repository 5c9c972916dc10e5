#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nzsg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the domain of an operation (negative smoothing width,
/// control outside its set, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Malformed coefficient expression. `offset` is the byte offset into the
/// source text.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Runtime fault while evaluating an expression (division by zero, sqrt of a
/// negative number, missing binding).
class EvalError : public Error {
public:
    EvalError(const std::string& what, std::size_t offset)
        : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// A game description failed a structural or numerical check.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Best-response iteration did not reach a fixed point. Carries the visited
/// control pairs.
class NoStaticNashError : public Error {
public:
    NoStaticNashError(const std::string& what, std::vector<std::pair<double, double>> cycle)
        : Error(what), cycle_(std::move(cycle)) {}
    const std::vector<std::pair<double, double>>& cycle() const noexcept { return cycle_; }

private:
    std::vector<std::pair<double, double>> cycle_;
};

/// Explicit advection step would violate the monotonicity bound dt*|b|/h <= 1.
class CflError : public Error {
public:
    using Error::Error;
};

/// Failure inside the PDE solver (singular tridiagonal system, resolver
/// failure at a node, ...).
class SolveError : public Error {
public:
    using Error::Error;
};

}  // namespace nzsg
