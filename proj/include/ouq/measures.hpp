#pragma once

// Discrete probability measures and their tensor products.
//
// A DiscreteMeasure is sum_i w_i delta(x_i) for one random variable. A
// ProductMeasure is the tensor product of K such measures: its joint support
// is every combination of one point per component and the joint weight is
// the product of the component weights. These are the finite-dimensional
// objects the bound optimization searches over.

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace ouq {

class DiscreteMeasure {
public:
    /// Throws std::invalid_argument on empty input, unequal lengths, or a
    /// negative / non-finite weight.
    DiscreteMeasure(std::vector<double> weights, std::vector<double> positions);

    static DiscreteMeasure point_mass(double x) { return DiscreteMeasure({1.0}, {x}); }

    std::size_t size() const { return weights_.size(); }
    std::span<const double> weights() const { return weights_; }
    std::span<const double> positions() const { return positions_; }
    double mass() const;

    bool operator==(const DiscreteMeasure&) const = default;

private:
    std::vector<double> weights_;
    std::vector<double> positions_;
};

/// Relative mass error beyond which probability operations renormalize a
/// working copy.
inline constexpr double kMassTolerance = 1e-8;

/// Weights scaled to sum to one. Throws ZeroMass.
DiscreteMeasure normalize(const DiscreteMeasure& m);

/// Probability-weighted moments. Unnormalized input is normalized first.
double mean(const DiscreteMeasure& m);
double variance(const DiscreteMeasure& m);
double std_dev(const DiscreteMeasure& m);

/// Positions shifted uniformly so the mean equals target.
DiscreteMeasure set_mean(const DiscreteMeasure& m, double target);

/// Mean set to target while keeping every position inside [lo, hi]. Uses the
/// uniform shift of set_mean when it stays inside the box, and otherwise
/// contracts the positions toward the bound on the target side. target must
/// lie in [lo, hi] and the positions must start inside the box.
DiscreteMeasure set_mean_within(const DiscreteMeasure& m, double target, double lo, double hi);

/// Positions rescaled about the mean so the variance equals target. Throws
/// DegenerateSpread when the current variance is zero and target is positive.
DiscreteMeasure set_variance(const DiscreteMeasure& m, double target);

/// set_variance(m, target * target).
DiscreteMeasure set_std(const DiscreteMeasure& m, double target);

/// Support-point counts, one per component.
struct ParamLayout {
    std::vector<std::size_t> npts;

    /// Length of a flattened parameter vector: sum of 2 * npts[k].
    std::size_t size() const;
    bool operator==(const ParamLayout&) const = default;
};

class ProductMeasure {
public:
    /// Throws std::invalid_argument when components is empty.
    explicit ProductMeasure(std::vector<DiscreteMeasure> components);

    std::size_t dimension() const { return components_.size(); }
    const DiscreteMeasure& operator[](std::size_t k) const { return components_.at(k); }
    const std::vector<DiscreteMeasure>& components() const { return components_; }

    /// Replace component k.
    ProductMeasure with(std::size_t k, DiscreteMeasure m) const;

    ParamLayout layout() const;
    /// Joint support size, the product of the component sizes.
    std::size_t support_size() const;

    bool operator==(const ProductMeasure&) const = default;

private:
    std::vector<DiscreteMeasure> components_;
};

/// Every component normalized.
ProductMeasure normalize(const ProductMeasure& pm);

/// Weights block then positions block for each component, in order.
std::vector<double> flatten(const ProductMeasure& pm);

/// Inverse of flatten. Throws LengthMismatch.
ProductMeasure load(std::span<const double> params, const ParamLayout& layout);

using PointFunction = std::function<double(std::span<const double>)>;
using PointPredicate = std::function<bool(std::span<const double>)>;
using MeasureTransform = std::function<ProductMeasure(ProductMeasure)>;

/// Visit every joint support point with its joint weight. The last component
/// varies fastest. Components are normalized first when needed.
void for_each_support_point(const ProductMeasure& pm,
                            const std::function<void(std::span<const double>, double)>& visit);

/// sum over the joint support of (product of weights) * f(point).
double expect(const ProductMeasure& pm, const PointFunction& f);

/// Total joint weight on points where failure holds.
double pof(const ProductMeasure& pm, const PointPredicate& failure);

struct SetExpectOptions {
    std::size_t max_evals = 5000;
};

/// Returns a measure whose expectation of `model` lies within `error` of
/// `target`. The input is returned unchanged when it already does.
/// Otherwise Nelder-Mead searches the flattened parameter vector, starting
/// from the input, with positions clipped to `position_bounds` (one (lo, hi)
/// per component), weights clipped to [0, 1] and renormalized, and
/// `inner_constraint` applied to every iterate. Throws InfeasibleConstraint
/// when the band is not reached within the budget.
ProductMeasure set_expect(const ProductMeasure& pm, const PointFunction& model, double target,
                          double error, std::span<const std::pair<double, double>> position_bounds,
                          const MeasureTransform& inner_constraint = {},
                          const SetExpectOptions& options = {});

} // namespace ouq
