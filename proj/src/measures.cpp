#include "ouq/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>

#include "ouq/errors.hpp"
#include "ouq/optimize.hpp"

namespace ouq {

DiscreteMeasure::DiscreteMeasure(std::vector<double> weights, std::vector<double> positions)
    : weights_(std::move(weights)), positions_(std::move(positions))
{
    if (weights_.empty()) throw std::invalid_argument("DiscreteMeasure: needs at least one support point");
    if (weights_.size() != positions_.size())
        throw std::invalid_argument("DiscreteMeasure: weights and positions differ in length");
    for (double w : weights_) {
        if (!(w >= 0.0) || !std::isfinite(w))
            throw std::invalid_argument("DiscreteMeasure: weights must be finite and non-negative");
    }
}

double DiscreteMeasure::mass() const
{
    return std::accumulate(weights_.begin(), weights_.end(), 0.0);
}

namespace {

// Weights as probabilities, renormalized only when the mass is off by more
// than kMassTolerance.
std::vector<double> probabilities(const DiscreteMeasure& m)
{
    std::vector<double> w(m.weights().begin(), m.weights().end());
    const double total = m.mass();
    if (total == 0.0) throw ZeroMass("discrete measure has zero mass");
    if (std::abs(total - 1.0) > kMassTolerance) {
        for (double& x : w) x /= total;
    }
    return w;
}

std::vector<double> copy(std::span<const double> s) { return {s.begin(), s.end()}; }

} // namespace

DiscreteMeasure normalize(const DiscreteMeasure& m)
{
    const double total = m.mass();
    if (total == 0.0) throw ZeroMass("normalize: zero mass");
    std::vector<double> w = copy(m.weights());
    for (double& x : w) x /= total;
    return DiscreteMeasure(std::move(w), copy(m.positions()));
}

double mean(const DiscreteMeasure& m)
{
    const auto w = probabilities(m);
    double sum = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) sum += w[i] * m.positions()[i];
    return sum;
}

double variance(const DiscreteMeasure& m)
{
    const auto w = probabilities(m);
    const double mu = mean(m);
    double sum = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double d = m.positions()[i] - mu;
        sum += w[i] * d * d;
    }
    return sum;
}

double std_dev(const DiscreteMeasure& m) { return std::sqrt(variance(m)); }

DiscreteMeasure set_mean(const DiscreteMeasure& m, double target)
{
    const double shift = target - mean(m);
    std::vector<double> x = copy(m.positions());
    for (double& p : x) p += shift;
    return DiscreteMeasure(copy(m.weights()), std::move(x));
}

DiscreteMeasure set_mean_within(const DiscreteMeasure& m, double target, double lo, double hi)
{
    if (!(lo <= target && target <= hi))
        throw InfeasibleConstraint("set_mean_within: target " + std::to_string(target) + " outside box");
    const double mu = mean(m);
    const auto [xmin, xmax] = std::minmax_element(m.positions().begin(), m.positions().end());
    const double shift = target - mu;
    if (*xmin + shift >= lo && *xmax + shift <= hi) return set_mean(m, target);

    std::vector<double> x = copy(m.positions());
    if (target > mu) {
        const double t = (target - mu) / (hi - mu);
        for (double& p : x) p += t * (hi - p);
    } else {
        const double t = (mu - target) / (mu - lo);
        for (double& p : x) p -= t * (p - lo);
    }
    for (double& p : x) p = std::clamp(p, lo, hi);
    return DiscreteMeasure(copy(m.weights()), std::move(x));
}

DiscreteMeasure set_variance(const DiscreteMeasure& m, double target)
{
    if (!(target >= 0.0)) throw std::invalid_argument("set_variance: target must be non-negative");
    const double current = variance(m);
    if (current == 0.0) {
        if (target == 0.0) return m;
        throw DegenerateSpread("set_variance: all support points coincide");
    }
    const double mu = mean(m);
    const double scale = std::sqrt(target / current);
    std::vector<double> x = copy(m.positions());
    for (double& p : x) p = mu + scale * (p - mu);
    return DiscreteMeasure(copy(m.weights()), std::move(x));
}

DiscreteMeasure set_std(const DiscreteMeasure& m, double target)
{
    if (!(target >= 0.0)) throw std::invalid_argument("set_std: target must be non-negative");
    return set_variance(m, target * target);
}

std::size_t ParamLayout::size() const
{
    return 2 * std::accumulate(npts.begin(), npts.end(), std::size_t{0});
}

ProductMeasure::ProductMeasure(std::vector<DiscreteMeasure> components) : components_(std::move(components))
{
    if (components_.empty()) throw std::invalid_argument("ProductMeasure: needs at least one component");
}

ProductMeasure ProductMeasure::with(std::size_t k, DiscreteMeasure m) const
{
    std::vector<DiscreteMeasure> c = components_;
    c.at(k) = std::move(m);
    return ProductMeasure(std::move(c));
}

ParamLayout ProductMeasure::layout() const
{
    ParamLayout layout;
    for (const auto& c : components_) layout.npts.push_back(c.size());
    return layout;
}

std::size_t ProductMeasure::support_size() const
{
    std::size_t n = 1;
    for (const auto& c : components_) n *= c.size();
    return n;
}

ProductMeasure normalize(const ProductMeasure& pm)
{
    std::vector<DiscreteMeasure> c;
    c.reserve(pm.dimension());
    for (const auto& m : pm.components()) c.push_back(normalize(m));
    return ProductMeasure(std::move(c));
}

std::vector<double> flatten(const ProductMeasure& pm)
{
    std::vector<double> out;
    out.reserve(pm.layout().size());
    for (const auto& m : pm.components()) {
        out.insert(out.end(), m.weights().begin(), m.weights().end());
        out.insert(out.end(), m.positions().begin(), m.positions().end());
    }
    return out;
}

ProductMeasure load(std::span<const double> params, const ParamLayout& layout)
{
    if (layout.npts.empty()) throw LengthMismatch("load: empty layout");
    if (params.size() != layout.size())
        throw LengthMismatch("load: expected " + std::to_string(layout.size()) + " parameters, got " +
                             std::to_string(params.size()));
    std::vector<DiscreteMeasure> c;
    std::size_t offset = 0;
    for (std::size_t n : layout.npts) {
        if (n == 0) throw LengthMismatch("load: component with zero support points");
        auto w = params.subspan(offset, n);
        auto x = params.subspan(offset + n, n);
        c.emplace_back(copy(w), copy(x));
        offset += 2 * n;
    }
    return ProductMeasure(std::move(c));
}

void for_each_support_point(const ProductMeasure& pm,
                            const std::function<void(std::span<const double>, double)>& visit)
{
    const std::size_t K = pm.dimension();
    std::vector<std::vector<double>> w;
    w.reserve(K);
    for (const auto& c : pm.components()) w.push_back(probabilities(c));

    std::vector<std::size_t> index(K, 0);
    std::vector<double> point(K);
    const std::size_t total = pm.support_size();
    for (std::size_t count = 0; count < total; ++count) {
        double weight = 1.0;
        for (std::size_t k = 0; k < K; ++k) {
            weight *= w[k][index[k]];
            point[k] = pm[k].positions()[index[k]];
        }
        visit(point, weight);
        for (std::size_t k = K; k-- > 0;) {
            if (++index[k] < pm[k].size()) break;
            index[k] = 0;
        }
    }
}

double expect(const ProductMeasure& pm, const PointFunction& f)
{
    double sum = 0.0;
    for_each_support_point(pm, [&](std::span<const double> x, double w) { sum += w * f(x); });
    return sum;
}

double pof(const ProductMeasure& pm, const PointPredicate& failure)
{
    double sum = 0.0;
    for_each_support_point(pm, [&](std::span<const double> x, double w) {
        if (failure(x)) sum += w;
    });
    return sum;
}

ProductMeasure set_expect(const ProductMeasure& pm, const PointFunction& model, double target,
                          double error, std::span<const std::pair<double, double>> position_bounds,
                          const MeasureTransform& inner_constraint, const SetExpectOptions& options)
{
    if (!(error >= 0.0)) throw std::invalid_argument("set_expect: error must be non-negative");
    if (position_bounds.size() != pm.dimension())
        throw LengthMismatch("set_expect: need one position bound per component");
    if (std::abs(expect(pm, model) - target) <= error) return pm;

    const ParamLayout layout = pm.layout();
    std::vector<double> lo;
    std::vector<double> hi;
    for (std::size_t k = 0; k < pm.dimension(); ++k) {
        const std::size_t n = layout.npts[k];
        lo.insert(lo.end(), n, 0.0);
        hi.insert(hi.end(), n, 1.0);
        lo.insert(lo.end(), n, position_bounds[k].first);
        hi.insert(hi.end(), n, position_bounds[k].second);
    }
    const Bounds bounds(std::move(lo), std::move(hi));

    std::optional<ProductMeasure> best;
    double best_gap = std::numeric_limits<double>::infinity();
    const auto gap = [&](std::span<const double> x) {
        try {
            ProductMeasure m = normalize(load(x, layout));
            if (inner_constraint) m = inner_constraint(std::move(m));
            const double g = std::abs(expect(m, model) - target);
            if (g < best_gap) {
                best_gap = g;
                best = std::move(m);
            }
            return g;
        } catch (const Error&) {
            return std::numeric_limits<double>::infinity();
        } catch (const std::invalid_argument&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    NelderMeadOptions nm;
    nm.target = error;
    // a collapsed simplex ends the run; the loop below restarts it
    nm.ftol = 1e-14;
    nm.xtol = 1e-12;

    std::vector<double> start = flatten(pm);
    bounds.clip(start);
    std::size_t used = 0;
    int stalls = 0;
    while (used < options.max_evals && best_gap > error && stalls < 2) {
        nm.max_evals = options.max_evals - used;
        const double before = best_gap;
        OptimizeResult r;
        try {
            r = nelder_mead(gap, start, bounds, nm);
        } catch (const NonFiniteObjective&) {
            break;
        }
        used += r.evals;
        start = r.x;
        stalls = best_gap < before ? 0 : stalls + 1;
    }

    if (!best || best_gap > error) {
        throw InfeasibleConstraint("set_expect: could not bring expectation within " + std::to_string(error) +
                                   " of " + std::to_string(target) + " (closest gap " +
                                   std::to_string(best_gap) + ")");
    }
    return *best;
}

} // namespace ouq
