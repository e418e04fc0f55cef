#pragma once

// Shared vocabulary: linear-algebra aliases, error types and number formatting.

#include <Eigen/Dense>

#include <charconv>
#include <cmath>
#include <stdexcept>
#include <string>
#include <system_error>

namespace levyou {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A d x d real matrix used as a drift operator (A, A-tilde or a candidate V).
using OperatorMatrix = Eigen::MatrixXd;

/// Argument outside the domain of an operation (e.g. t outside [0, T]).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Caller broke a documented precondition (mismatched dimensions, a set that
/// is not bounded below, an invalid path, ...).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Parse failure in a path file or a config file; carries the 1-based line.
class FormatError : public std::runtime_error {
public:
    FormatError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) {
        throw ContractViolation(message);
    }
}

/// Shortest decimal representation that parses back to the same double.
inline std::string format_double(double value) {
    char buffer[64];
    auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    if (ec != std::errc{}) {
        throw std::runtime_error("format_double: conversion failed");
    }
    return std::string(buffer, end);
}

inline double parse_double(std::string_view text, std::size_t line = 0) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) {
        text.remove_prefix(1);
    }
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
        text.remove_suffix(1);
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw FormatError(line, "not a number: '" + std::string(text) + "'");
    }
    return value;
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace levyou
