#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tbss {

/// Shape, mode or size mismatch in an argument.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A covariance-type matrix failed the positive-definiteness threshold.
class SingularCovarianceError : public std::runtime_error {
public:
    SingularCovarianceError(const std::string& what, double eigenvalue)
        : std::runtime_error(what), eigenvalue_(eigenvalue) {}

    double eigenvalue() const noexcept { return eigenvalue_; }

private:
    double eigenvalue_;
};

/// The model is not identifiable for the given moments (tied kurtosis means).
class IdentifiabilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An iterative routine hit its iteration cap.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Malformed input file. Line and column are 1-based; column 0 means "whole line".
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& message, std::size_t line, std::size_t column)
        : std::runtime_error("line " + std::to_string(line) +
                             (column ? ", column " + std::to_string(column) : std::string()) +
                             ": " + message),
          line_(line), column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

}  // namespace tbss
