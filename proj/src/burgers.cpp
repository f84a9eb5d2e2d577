#include "ouq/burgers.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ouq/errors.hpp"

namespace ouq::burgers {

void Params::validate() const
{
    if (!(v > 0.0) || !std::isfinite(v))
        throw std::invalid_argument("burgers: viscosity must be positive, got " + std::to_string(v));
    if (!(delta >= 0.0) || !std::isfinite(delta))
        throw std::invalid_argument("burgers: delta must be non-negative, got " + std::to_string(delta));
}

std::pair<double, double> residuals(const Params& params, double z, double a)
{
    const double k = 0.5 * (a / params.v);
    return {a * std::tanh(k * (1.0 - z)) - 1.0, a * std::tanh(k * (1.0 + z)) - 1.0 - params.delta};
}

double objective(const Params& params, double z, double a)
{
    const auto [r1, r2] = residuals(params, z, a);
    return std::abs(r1) + std::abs(r2);
}

namespace {

// Damped Newton on the residual pair, z kept in [0, 1]. Only steps that lower
// the objective are taken, so the fit never gets worse.
void polish(const Params& p, Solution& sol, std::size_t steps)
{
    for (std::size_t it = 0; it < steps && sol.fit > 0.0; ++it) {
        const double z = sol.z_star;
        const double a = sol.a;
        const double c1 = (1.0 - z) / (2.0 * p.v);
        const double c2 = (1.0 + z) / (2.0 * p.v);
        const double t1 = std::tanh(a * c1);
        const double t2 = std::tanh(a * c2);
        // sech^2 via cosh keeps precision where tanh saturates
        const double s1 = 1.0 / (std::cosh(a * c1) * std::cosh(a * c1));
        const double s2 = 1.0 / (std::cosh(a * c2) * std::cosh(a * c2));
        const auto [r1, r2] = residuals(p, z, a);

        const double j11 = -a * a * s1 / (2.0 * p.v); // d r1 / dz
        const double j12 = t1 + a * c1 * s1;          // d r1 / da
        const double j21 = a * a * s2 / (2.0 * p.v);
        const double j22 = t2 + a * c2 * s2;
        const double det = j11 * j22 - j12 * j21;
        if (det == 0.0 || !std::isfinite(det)) return;

        const double dz = (r1 * j22 - r2 * j12) / det;
        const double da = (j11 * r2 - j21 * r1) / det;

        bool improved = false;
        for (double scale = 1.0; scale > 1e-4; scale *= 0.5) {
            const double zn = std::clamp(z - scale * dz, 0.0, 1.0);
            const double an = a - scale * da;
            const double fn = objective(p, zn, an);
            if (fn < sol.fit) {
                sol = {zn, an, fn};
                improved = true;
                break;
            }
        }
        if (!improved) return;
    }
}

} // namespace

Solution solve_best(const Params& params, const SolveConfig& cfg)
{
    params.validate();
    const double inf = std::numeric_limits<double>::infinity();
    const Bounds bounds({0.0, -inf}, {1.0, inf});

    LatticeOptions options;
    options.nbins = cfg.nbins;
    options.nm.ftol = cfg.ftol;
    options.nm.max_evals = cfg.max_evals;

    const auto f = [&params](std::span<const double> x) { return objective(params, x[0], x[1]); };
    const OptimizeResult best = lattice(f, 2, bounds, options);

    Solution sol{best.x[0], best.x[1], best.f};
    polish(params, sol, cfg.newton_steps);
    return sol;
}

Solution solve(const Params& params, const SolveConfig& cfg)
{
    Solution sol = solve_best(params, cfg);
    if (!(sol.fit <= cfg.accept_tol)) {
        throw ConvergenceFailure("burgers: fit " + std::to_string(sol.fit) + " exceeds tolerance at v=" +
                                     std::to_string(params.v) + ", delta=" + std::to_string(params.delta),
                                 sol.fit);
    }
    return sol;
}

double u_profile(const Params& params, const Solution& sol, double x)
{
    return -sol.a * std::tanh(0.5 * (sol.a / params.v) * (x - sol.z_star));
}

} // namespace ouq::burgers
