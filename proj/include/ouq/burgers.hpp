#pragma once

// Steady-state viscous Burgers' equation on [-1, 1] with u(-1) = 1 + delta and
// u(1) = -1. The exact profile is u(x) = -a tanh(a / (2v) (x - z)), where z is
// the transition-layer location (u(z) = 0) and a is fixed by the two boundary
// conditions.

#include <cstddef>
#include <utility>

#include "ouq/optimize.hpp"

namespace ouq::burgers {

struct Params {
    double v;     ///< viscosity, > 0
    double delta; ///< left-boundary perturbation, >= 0

    /// Throws std::invalid_argument unless v > 0 and delta >= 0.
    void validate() const;
};

struct Solution {
    double z_star = 0.0; ///< in [0, 1]
    double a = 0.0;      ///< |a| is close to 1 + delta
    double fit = 0.0;    ///< |r1| + |r2| at (z_star, a)
};

struct SolveConfig {
    std::size_t nbins = 4;
    double ftol = 1e-8;
    std::size_t max_evals = 2000; ///< per lattice member
    double accept_tol = 1e-9;
    /// Newton steps applied to the lattice minimizer (0 disables polishing).
    std::size_t newton_steps = 8;
};

/// The two boundary-condition residuals at (z, a).
std::pair<double, double> residuals(const Params& params, double z, double a);

/// |r1| + |r2|; zero exactly at a root.
double objective(const Params& params, double z, double a);

/// Best (z, a) found by the lattice ensemble, without the acceptance check.
Solution solve_best(const Params& params, const SolveConfig& cfg = {});

/// As solve_best, but throws ConvergenceFailure when fit > cfg.accept_tol.
Solution solve(const Params& params, const SolveConfig& cfg = {});

/// u(x) = -a tanh(a / (2v) (x - z_star)).
double u_profile(const Params& params, const Solution& sol, double x);

} // namespace ouq::burgers
