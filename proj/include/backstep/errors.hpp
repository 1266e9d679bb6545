#pragma once

#include <stdexcept>
#include <string>

namespace backstep {

/// Base class for all library errors. `code()` is a stable identifier used
/// in machine-readable CLI output.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what, std::string code = "Error")
        : std::runtime_error(what), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

class NonPositiveSpeed : public Error {
public:
    NonPositiveSpeed(double x, double value)
        : Error("transport speed non-positive at x=" + std::to_string(x) + " (value " +
                    std::to_string(value) + ")",
                "NonPositiveSpeed"),
          x(x), value(value) {}
    double x;
    double value;
};

class NonFiniteCoefficient : public Error {
public:
    explicit NonFiniteCoefficient(const std::string& what)
        : Error(what, "NonFiniteCoefficient") {}
};

class GridTooCoarse : public Error {
public:
    explicit GridTooCoarse(const std::string& what) : Error(what, "GridTooCoarse") {}
};

class NoConvergence : public Error {
public:
    NoConvergence(int iterations, double last_increment)
        : Error("fixed-point iteration did not reach tolerance after " +
                    std::to_string(iterations) + " sweeps (last increment " +
                    std::to_string(last_increment) + ")",
                "NoConvergence"),
          iterations(iterations), last_increment(last_increment) {}
    int iterations;
    double last_increment;
};

class QNearZero : public Error {
public:
    explicit QNearZero(double q)
        : Error("reflection coefficient q=" + std::to_string(q) +
                    " too close to zero; use the q=0 kernel branch",
                "QNearZero"),
          q(q) {}
    double q;
};

class HyperbolicityViolation : public Error {
public:
    explicit HyperbolicityViolation(const std::string& what)
        : Error(what, "HyperbolicityViolation") {}
};

class HyperbolicitySignChange : public Error {
public:
    explicit HyperbolicitySignChange(const std::string& what)
        : Error(what, "HyperbolicitySignChange") {}
};

class DegenerateRates : public Error {
public:
    DegenerateRates(double d1, double d2)
        : Error("extension rates d1=" + std::to_string(d1) + ", d2=" + std::to_string(d2) +
                    " must be positive and distinct",
                "DegenerateRates") {}
};

class UnstableStep : public Error {
public:
    UnstableStep(double t, double norm)
        : Error("simulation diverged at t=" + std::to_string(t) + " (L2 norm " +
                    std::to_string(norm) + ")",
                "UnstableStep"),
          t(t), norm(norm) {}
    double t;
    double norm;
};

class SmallDenominator : public Error {
public:
    explicit SmallDenominator(const std::string& what) : Error(what, "SmallDenominator") {}
};

class NonPositiveNorm : public Error {
public:
    explicit NonPositiveNorm(const std::string& what) : Error(what, "NonPositiveNorm") {}
};

class SyntaxError : public Error {
public:
    SyntaxError(std::size_t offset, const std::string& message)
        : Error("syntax error at offset " + std::to_string(offset) + ": " + message,
                "SyntaxError"),
          offset(offset) {}
    std::size_t offset;
};

class UnknownIdentifier : public Error {
public:
    UnknownIdentifier(std::size_t offset, const std::string& name)
        : Error("unknown identifier '" + name + "' at offset " + std::to_string(offset),
                "UnknownIdentifier"),
          offset(offset), name(name) {}
    std::size_t offset;
    std::string name;
};

class EvalError : public Error {
public:
    explicit EvalError(const std::string& what) : Error(what, "EvalError") {}
};

class MissingField : public Error {
public:
    explicit MissingField(const std::string& name)
        : Error("missing config field '" + name + "'", "MissingField"), name(name) {}
    std::string name;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what, "ConfigError") {}
};

}  // namespace backstep
