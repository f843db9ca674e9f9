#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fracml {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Evaluation at a pole (gamma at a non-positive integer, reflection at an integer).
class PoleError : public DomainError {
public:
    using DomainError::DomainError;
};

/// Result not representable in double precision.
class OverflowError : public Error {
public:
    using Error::Error;
};

/// A series failed to converge within its term budget, or lost too many digits.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double partial, std::size_t terms)
        : Error(what), partial_(partial), terms_(terms) {}

    double partial_sum() const noexcept { return partial_; }
    std::size_t terms() const noexcept { return terms_; }

private:
    double partial_;
    std::size_t terms_;
};

/// Adaptive quadrature could not meet its tolerance; carries the best estimate.
class QuadratureError : public Error {
public:
    QuadratureError(const std::string& what, double best, double err_est)
        : Error(what), best_(best), err_(err_est) {}

    double best_value() const noexcept { return best_; }
    double error_estimate() const noexcept { return err_; }

private:
    double best_;
    double err_;
};

/// The integral grows without bound (e.g. a Stieltjes moment at sigma >= alpha).
class DivergenceError : public QuadratureError {
public:
    using QuadratureError::QuadratureError;
};

/// Operator used outside its declared validity window (squeeze kernel).
class RegimeError : public Error {
public:
    using Error::Error;
};

/// Per-point failures collected while evaluating a grid.
class SliceError : public Error {
public:
    SliceError(const std::string& what, std::vector<std::pair<std::size_t, std::string>> failures,
               bool regime)
        : Error(what), failures_(std::move(failures)), regime_(regime) {}

    const std::vector<std::pair<std::size_t, std::string>>& failures() const noexcept {
        return failures_;
    }
    /// True when every failing point was a regime violation.
    bool regime_violation() const noexcept { return regime_; }

private:
    std::vector<std::pair<std::size_t, std::string>> failures_;
    bool regime_;
};

}  // namespace fracml
