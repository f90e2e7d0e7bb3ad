#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace sqpc {

/// Invalid physical input (non-positive mass, negative width, ...).
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Inconsistent or malformed configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Linear algebra or eigensolver failure.
class NumericError : public std::runtime_error {
public:
    NumericError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Fixed-point iteration did not reach tolerance within the iteration cap.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, std::vector<double> history)
        : std::runtime_error(what), history_(std::move(history)) {}
    const std::vector<double>& residual_history() const noexcept { return history_; }

private:
    std::vector<double> history_;
};

/// A searched-for feature (threshold crossing, plateau) is absent.
class NotFoundError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace sqpc
