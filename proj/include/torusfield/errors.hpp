#pragma once

#include <stdexcept>
#include <string>

namespace torusfield {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A symmetric matrix handed to factor_psd had a pivot below the
// semidefinite clamping band.
struct NotPsdError : Error {
    double pivot;
    int index;
    NotPsdError(double p, int i)
        : Error("matrix is not positive semidefinite (pivot " + std::to_string(p) +
                " at index " + std::to_string(i) + ")"),
          pivot(p), index(i) {}
};

// Conditioning on a singular observed block.  Expected in the y -> 0 limit of
// the two-point problem; callers switch to the singular-limit policy.
struct DegenerateConditioningError : Error {
    double smallest_pivot;
    explicit DegenerateConditioningError(double p)
        : Error("degenerate Gaussian conditioning (smallest pivot " +
                std::to_string(p) + ")"),
          smallest_pivot(p) {}
};

// Quadrature did not reach the requested accuracy.
struct QuadratureError : Error {
    double achieved;
    QuadratureError(const std::string& what, double a)
        : Error(what + " (achieved error " + std::to_string(a) + ")"), achieved(a) {}
};

// Lattice radius too small to meet the periodization tail tolerance.
struct LatticeRadiusError : Error {
    using Error::Error;
};

// Critical-point enumeration could not be trusted (Newton failure rate or
// incomplete Morse data after escalation).
struct EnumerationError : Error {
    using Error::Error;
};

// Frequency budget exceeded when building a sample.
struct BudgetError : Error {
    using Error::Error;
};

// A computed quantity violated a hard invariant (exit code 2).
struct InvariantViolation : Error {
    using Error::Error;
};

// A numerical tolerance could not be met (exit code 3).
struct ToleranceError : Error {
    using Error::Error;
};

// Bad configuration (exit code 4).
struct ConfigError : Error {
    using Error::Error;
};

} // namespace torusfield
