#pragma once

// Optimal bounds on the probability of success of the Burgers' transition
// layer. The input delta is described by a discrete measure on [0, eps] with
// nx support points; differential evolution searches the weights and
// positions for the extreme P[z*(delta) > (1 + dx/100) zbar] over all
// measures that satisfy the selected moment constraints.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ouq/burgers.hpp"
#include "ouq/measures.hpp"
#include "ouq/optimize.hpp"

namespace ouq {

/// Half-width of the normal 95% confidence interval of a sample mean,
/// 1.96 * std / sqrt(n).
double meanconf(double std, std::size_t n);

enum class Direction { Upper, Lower };

/// -1 for Upper (maximize), +1 for Lower (minimize).
int minmax(Direction d);
std::string to_string(Direction d);
/// "upper" or "lower". Throws std::invalid_argument.
Direction parse_direction(const std::string& name);

enum class ConstraintKind { MeanDelta, MeanDeltaVarDelta, MeanZ, MeanDeltaMeanZ };

std::string to_string(ConstraintKind k);
/// "mean-delta", "mean-delta-var-delta", "mean-z" or "mean-delta-mean-z".
ConstraintKind parse_constraint_kind(const std::string& name);

/// Moments of a reference sample, as written to an mc sidecar.
struct Targets {
    double z_mean = 0.0;
    double z_std = 0.0;
    double d_mean = 0.0;
    double d_std = 0.0;
    std::size_t n = 0;
};

/// Reads z_mean, z_std, d_mean, d_std and N from a JSON file.
Targets load_targets(const std::string& path);

struct ConstraintSet {
    ConstraintKind kind = ConstraintKind::MeanDelta;
    std::optional<double> d_mean;
    std::optional<double> d_std;
    std::optional<double> z_mean;
    double d_range = 0.0;     ///< band on mean(delta)
    double d_std_range = 0.0; ///< band on std(delta)
    double z_range = 0.0;     ///< band on E[z*]

    /// Targets of the kind's constraints, each with band meanconf(std, N).
    static ConstraintSet from_targets(ConstraintKind kind, const Targets& t);

    /// Throws std::invalid_argument when a target of the kind is missing or a
    /// band is negative.
    void validate() const;
};

struct OuqProblem {
    double v = 0.1;
    double eps = 0.1;
    std::size_t nx = 3;
    Direction direction = Direction::Upper;
    int dx_percent = 0;
    double z_mean_ref = 0.0; ///< success is z* > (1 + dx/100) * z_mean_ref
    ConstraintSet constraints;
    DeConfig solver;
    double tol = 1e-6;     ///< shared by the change-over-generation and target rules
    std::size_t ngen = 10; ///< change-over-generation window
    burgers::SolveConfig solve;
    SetExpectOptions expect;
    /// When set, the final solver state is written here.
    std::string checkpoint_path;

    void validate() const;
    double threshold() const;
    ParamLayout layout() const;
    /// Weights in [0, 1], positions in [0, eps].
    Bounds bounds() const;
};

/// Memoized z*(v, delta). Keys are delta quantized to 1e-12. Not thread
/// safe; use one per run.
class ZStarModel {
public:
    explicit ZStarModel(double v, burgers::SolveConfig cfg = {});

    const burgers::Solution& solve(double delta);
    /// Best z* found, accepted or not.
    double z(double delta) { return solve(delta).z_star; }
    bool accepted(double delta) { return solve(delta).fit <= cfg_.accept_tol; }

    std::size_t solves() const { return cache_.size(); }
    const std::vector<double>& missed_deltas() const { return missed_; }

private:
    double v_;
    burgers::SolveConfig cfg_;
    std::unordered_map<long long, burgers::Solution> cache_;
    std::vector<double> missed_;
};

/// failure(delta) = not (z*(delta) > threshold). A solve that misses the
/// acceptance tolerance counts as failure.
PointPredicate failure_indicator(const OuqProblem& problem, ZStarModel& model);

/// P(success) of a measure on delta.
double success_probability(const OuqProblem& problem, ZStarModel& model, const ProductMeasure& pm);

struct ConstraintResidual {
    std::string name;
    double value = 0.0;
    double target = 0.0;
    double band = 0.0;

    double residual() const;
    bool ok() const;
};

/// Every constraint of the problem's set evaluated on pm.
std::vector<ConstraintResidual> constraint_residuals(const OuqProblem& problem, ZStarModel& model,
                                                     const ProductMeasure& pm);

/// Clips a parameter vector to the problem box and maps it to one whose
/// measure is normalized and satisfies the constraint set. Throws
/// InfeasibleConstraint (or DegenerateSpread, ZeroMass) when it cannot.
std::vector<double> constraints_transform(const OuqProblem& problem, ZStarModel& model,
                                          std::span<const double> rv);

/// MINMAX * P(success), or +infinity when a constraint band is violated.
double objective(const OuqProblem& problem, ZStarModel& model, std::span<const double> rv);

struct BoundResult {
    double value = 0.0; ///< the bound on P(success)
    ProductMeasure measure{{DiscreteMeasure::point_mass(0.0)}};
    std::size_t evals = 0;
    std::size_t generations = 0;
    std::string termination_reason;
    bool feasible = false;
    std::vector<ConstraintResidual> residuals;
    std::size_t model_solves = 0;
    std::vector<double> missed_deltas;
    DeCheckpoint checkpoint;
};

/// Runs differential evolution on the problem. Throws InfeasibleConstraint
/// when no feasible point was found.
BoundResult solve_bound(const OuqProblem& problem);

struct SweepRow {
    int dx = 0;
    std::optional<BoundResult> lower;
    std::optional<BoundResult> upper;
    std::string lower_error;
    std::string upper_error;
};

/// Bounds in each of `directions` at each dx. Failed entries carry their
/// error and the sweep continues. Jobs run on up to `workers` threads; the
/// result does not depend on the worker count.
std::vector<SweepRow> bound_sweep(const OuqProblem& problem, std::span<const int> dx_list,
                                  std::size_t workers = 1,
                                  const std::vector<Direction>& directions = {Direction::Lower, Direction::Upper});

/// CSV "dx,lower,upper,evals_lower,evals_upper"; failed entries are "nan".
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path,
                     const std::string& comment = {});

} // namespace ouq
