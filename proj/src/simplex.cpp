#include "ouq/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ouq/errors.hpp"

namespace ouq {

Bounds::Bounds(std::vector<double> lo, std::vector<double> hi) : lower(std::move(lo)), upper(std::move(hi))
{
    if (lower.size() != upper.size()) throw LengthMismatch("Bounds: lower and upper differ in length");
    for (std::size_t i = 0; i < lower.size(); ++i) {
        if (std::isfinite(lower[i]) && std::isfinite(upper[i]) && lower[i] > upper[i])
            throw std::invalid_argument("Bounds: lower > upper at index " + std::to_string(i));
    }
}

Bounds Bounds::unbounded(std::size_t n)
{
    const double inf = std::numeric_limits<double>::infinity();
    return Bounds(std::vector<double>(n, -inf), std::vector<double>(n, inf));
}

bool Bounds::is_finite(std::size_t i) const
{
    return std::isfinite(lower[i]) && std::isfinite(upper[i]);
}

bool Bounds::contains(std::span<const double> x) const
{
    if (x.size() != size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < lower[i] || x[i] > upper[i]) return false;
    }
    return true;
}

void Bounds::clip(std::span<double> x) const
{
    if (x.size() != size()) throw LengthMismatch("Bounds::clip: dimension mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lower[i], upper[i]);
}

std::pair<double, double> Bounds::start_box(std::size_t i, double default_half_width) const
{
    const bool lo_ok = std::isfinite(lower[i]);
    const bool hi_ok = std::isfinite(upper[i]);
    if (lo_ok && hi_ok) return {lower[i], upper[i]};
    if (lo_ok) return {lower[i], lower[i] + 2.0 * default_half_width};
    if (hi_ok) return {upper[i] - 2.0 * default_half_width, upper[i]};
    return {-default_half_width, default_half_width};
}

namespace {

struct Vertex {
    std::vector<double> x;
    double f;
};

class Evaluator {
public:
    Evaluator(const Objective& f, const Bounds& bounds) : f_(f), bounds_(bounds) {}

    Vertex operator()(std::vector<double> x)
    {
        bounds_.clip(x);
        double value = f_(x);
        ++count;
        if (!std::isfinite(value)) value = std::numeric_limits<double>::infinity();
        return {std::move(x), value};
    }

    std::size_t count = 0;

private:
    const Objective& f_;
    const Bounds& bounds_;
};

} // namespace

OptimizeResult nelder_mead(const Objective& f, std::span<const double> x0, const Bounds& bounds,
                           const NelderMeadOptions& options)
{
    const std::size_t n = x0.size();
    if (n == 0) throw std::invalid_argument("nelder_mead: empty start vector");
    if (bounds.size() != n) throw LengthMismatch("nelder_mead: bounds do not match start vector");

    Evaluator eval(f, bounds);
    std::vector<Vertex> simplex;
    simplex.reserve(n + 1);
    simplex.push_back(eval(std::vector<double>(x0.begin(), x0.end())));

    for (std::size_t i = 0; i < n; ++i) {
        double step = 0.0;
        if (!options.initial_step.empty()) {
            step = options.initial_step.at(i);
        } else {
            const auto [lo, hi] = bounds.start_box(i);
            step = 0.1 * (hi - lo);
        }
        if (step == 0.0) step = 0.00025;
        std::vector<double> x = simplex.front().x;
        x[i] += step;
        if (x[i] > bounds.upper[i]) x[i] = simplex.front().x[i] - step;
        simplex.push_back(eval(std::move(x)));
    }

    if (std::all_of(simplex.begin(), simplex.end(), [](const Vertex& v) { return std::isinf(v.f); }))
        throw NonFiniteObjective("nelder_mead: objective is non-finite on the whole initial simplex");

    const auto by_value = [](const Vertex& a, const Vertex& b) { return a.f < b.f; };
    std::vector<double> centroid(n);
    const auto along = [&](double t, const std::vector<double>& from) {
        // centroid + t * (from - centroid)
        std::vector<double> x(n);
        for (std::size_t j = 0; j < n; ++j) x[j] = centroid[j] + t * (from[j] - centroid[j]);
        return x;
    };

    while (true) {
        std::stable_sort(simplex.begin(), simplex.end(), by_value);
        const Vertex& best = simplex.front();
        if (options.target && best.f <= *options.target) break;
        if (eval.count >= options.max_evals) break;

        const double fspread = simplex.back().f - best.f;
        double xspread = 0.0;
        for (std::size_t i = 1; i <= n; ++i) {
            for (std::size_t j = 0; j < n; ++j)
                xspread = std::max(xspread, std::abs(simplex[i].x[j] - best.x[j]));
        }
        if (fspread <= options.ftol && xspread <= options.xtol) break;

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i].x[j];
        }
        for (double& c : centroid) c /= static_cast<double>(n);

        Vertex& worst = simplex.back();
        const double second_worst = simplex[n - 1].f;

        Vertex reflected = eval(along(-options.reflection, worst.x));
        if (reflected.f < best.f) {
            Vertex expanded = eval(along(-options.reflection * options.expansion, worst.x));
            worst = expanded.f < reflected.f ? std::move(expanded) : std::move(reflected);
            continue;
        }
        if (reflected.f < second_worst) {
            worst = std::move(reflected);
            continue;
        }
        if (reflected.f < worst.f) {
            Vertex outside = eval(along(options.contraction, reflected.x));
            if (outside.f <= reflected.f) {
                worst = std::move(outside);
                continue;
            }
        } else {
            Vertex inside = eval(along(options.contraction, worst.x));
            if (inside.f < worst.f) {
                worst = std::move(inside);
                continue;
            }
        }

        // shrink toward the best vertex
        const std::vector<double> anchor = simplex.front().x;
        for (std::size_t i = 1; i <= n; ++i) {
            std::vector<double> x(n);
            for (std::size_t j = 0; j < n; ++j)
                x[j] = anchor[j] + options.shrink * (simplex[i].x[j] - anchor[j]);
            simplex[i] = eval(std::move(x));
        }
    }

    std::stable_sort(simplex.begin(), simplex.end(), by_value);
    return {std::move(simplex.front().x), simplex.front().f, eval.count};
}

std::vector<std::size_t> lattice_shape(std::size_t ndim, std::size_t nbins)
{
    if (ndim == 0) throw std::invalid_argument("lattice_shape: ndim must be positive");
    if (nbins == 0) throw std::invalid_argument("lattice_shape: nbins must be positive");

    std::vector<std::size_t> factors;
    std::size_t rest = nbins;
    for (std::size_t p = 2; p * p <= rest; ++p) {
        while (rest % p == 0) {
            factors.push_back(p);
            rest /= p;
        }
    }
    if (rest > 1) factors.push_back(rest);
    std::sort(factors.rbegin(), factors.rend());

    // largest factors first, each onto the currently smallest dimension
    std::vector<std::size_t> shape(ndim, 1);
    for (std::size_t p : factors) {
        auto smallest = std::min_element(shape.begin(), shape.end());
        *smallest *= p;
    }
    return shape;
}

std::vector<std::vector<double>> lattice_starts(std::size_t ndim, const Bounds& bounds,
                                                const LatticeOptions& options)
{
    if (bounds.size() != ndim) throw LengthMismatch("lattice: bounds do not match ndim");
    const auto shape = lattice_shape(ndim, options.nbins);

    std::vector<std::vector<double>> centers(ndim);
    for (std::size_t d = 0; d < ndim; ++d) {
        const auto [lo, hi] = bounds.start_box(d, options.default_half_width);
        const double width = (hi - lo) / static_cast<double>(shape[d]);
        for (std::size_t k = 0; k < shape[d]; ++k)
            centers[d].push_back(lo + (static_cast<double>(k) + 0.5) * width);
    }

    std::vector<std::vector<double>> starts;
    std::vector<std::size_t> index(ndim, 0);
    for (std::size_t count = 0; count < options.nbins; ++count) {
        std::vector<double> x(ndim);
        for (std::size_t d = 0; d < ndim; ++d) x[d] = centers[d][index[d]];
        starts.push_back(std::move(x));
        for (std::size_t d = ndim; d-- > 0;) {
            if (++index[d] < shape[d]) break;
            index[d] = 0;
        }
    }
    return starts;
}

std::vector<OptimizeResult> lattice_runs(const Objective& f, std::size_t ndim, const Bounds& bounds,
                                         const LatticeOptions& options)
{
    NelderMeadOptions nm = options.nm;
    if (nm.initial_step.empty()) {
        for (std::size_t d = 0; d < ndim; ++d) {
            const auto [lo, hi] = bounds.start_box(d, options.default_half_width);
            nm.initial_step.push_back(0.1 * (hi - lo));
        }
    }

    std::vector<OptimizeResult> runs;
    for (const auto& start : lattice_starts(ndim, bounds, options))
        runs.push_back(nelder_mead(f, start, bounds, nm));
    return runs;
}

OptimizeResult lattice(const Objective& f, std::size_t ndim, const Bounds& bounds,
                       const LatticeOptions& options)
{
    auto runs = lattice_runs(f, ndim, bounds, options);
    std::size_t total = 0;
    std::size_t best = 0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        total += runs[i].evals;
        if (runs[i].f < runs[best].f) best = i;
    }
    OptimizeResult result = std::move(runs[best]);
    result.evals = total;
    return result;
}

} // namespace ouq
