#pragma once

#include <stdexcept>
#include <string>

namespace sclock {

// Invalid inputs: parameters out of range, malformed specs, bad geometry.
// The CLI maps these to exit code 1.
class DomainError : public std::invalid_argument {
public:
    explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

// Contract geometry already knocked out at inception (F0 beyond a barrier).
class KnockedOutError : public DomainError {
public:
    explicit KnockedOutError(const std::string& what) : DomainError(what) {}
};

// Numerical failure of an otherwise valid computation: quadrature or series
// non-convergence, ODE step underflow, singular systems. Exit code 2.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

class ConvergenceError : public NumericalError {
public:
    ConvergenceError(const std::string& what, double last, double previous)
        : NumericalError(what + " (last estimate " + std::to_string(last) + ", previous " +
                         std::to_string(previous) + ")"),
          last_(last),
          previous_(previous) {}
    double last() const noexcept { return last_; }
    double previous() const noexcept { return previous_; }

private:
    double last_;
    double previous_;
};

class IntegrationFailure : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class UnsupportedFamilyError : public DomainError {
public:
    using DomainError::DomainError;
};

}  // namespace sclock
