#pragma once

#include <stdexcept>
#include <string>

namespace ouq {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A Burgers solve finished with a residual above the acceptance tolerance.
class ConvergenceFailure : public Error {
public:
    ConvergenceFailure(const std::string& what, double fit) : Error(what), fit_(fit) {}
    double fit() const noexcept { return fit_; }

private:
    double fit_;
};

/// Total weight of a discrete measure is zero.
class ZeroMass : public Error {
public:
    using Error::Error;
};

/// A variance target is positive but every support point coincides.
class DegenerateSpread : public Error {
public:
    using Error::Error;
};

/// A constraint could not be imposed within the evaluation budget.
class InfeasibleConstraint : public Error {
public:
    using Error::Error;
};

/// A parameter vector does not match its layout.
class LengthMismatch : public Error {
public:
    using Error::Error;
};

/// The objective was non-finite at every vertex of the initial simplex.
class NonFiniteObjective : public Error {
public:
    using Error::Error;
};

/// Filtering a sample to [lo, hi] left nothing.
class EmptyAfterFilter : public Error {
public:
    using Error::Error;
};

/// Monte Carlo draws hit the hard cap before enough solves were accepted.
class BufferExhausted : public Error {
public:
    using Error::Error;
};

} // namespace ouq
