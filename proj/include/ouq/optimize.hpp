#pragma once

// Derivative-free optimizers: bounded Nelder-Mead, a lattice ensemble of
// Nelder-Mead runs, and differential evolution with a constraint transform
// and composable termination rules.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ouq {

using Objective = std::function<double(std::span<const double>)>;

/// Maps a candidate vector to a vector satisfying some set of constraints.
using VectorTransform = std::function<std::vector<double>(std::span<const double>)>;

/// Box bounds; an infinite entry marks that side unbounded.
struct Bounds {
    std::vector<double> lower;
    std::vector<double> upper;

    Bounds() = default;
    Bounds(std::vector<double> lo, std::vector<double> hi);

    static Bounds unbounded(std::size_t n);

    std::size_t size() const { return lower.size(); }
    bool is_finite(std::size_t i) const;
    bool contains(std::span<const double> x) const;
    void clip(std::span<double> x) const;

    /// Finite box used where a search needs a starting region. Unbounded
    /// sides are replaced from [-default_half_width, default_half_width].
    std::pair<double, double> start_box(std::size_t i, double default_half_width = 2.0) const;
};

struct OptimizeResult {
    std::vector<double> x;
    double f = std::numeric_limits<double>::infinity();
    std::size_t evals = 0;
};

struct NelderMeadOptions {
    /// Stop once max f - min f over the simplex is at most ftol and the
    /// simplex vertices lie within xtol of the best vertex.
    double ftol = 1e-8;
    double xtol = 1e-4;
    /// Checked before each iteration, so a run may exceed it by up to n + 1.
    std::size_t max_evals = 10000;
    /// Stop as soon as the best value reaches this.
    std::optional<double> target;
    /// Per-dimension initial step. Empty means 0.1 of each start box.
    std::vector<double> initial_step;
    double reflection = 1.0;
    double expansion = 2.0;
    double contraction = 0.5;
    double shrink = 0.5;
};

/// Bounded Nelder-Mead. Every trial point is clipped to the bounds before it
/// is evaluated. Non-finite values are treated as +infinity.
OptimizeResult nelder_mead(const Objective& f, std::span<const double> x0, const Bounds& bounds,
                           const NelderMeadOptions& options = {});

struct LatticeOptions {
    /// Total number of starts, factored into a grid across dimensions.
    std::size_t nbins = 4;
    /// Half-width of the box gridded along unbounded dimensions.
    double default_half_width = 2.0;
    NelderMeadOptions nm;
};

/// Per-dimension bin counts whose product is nbins, as even as possible.
std::vector<std::size_t> lattice_shape(std::size_t ndim, std::size_t nbins);

/// Cell-center starting points of the lattice, first dimension slowest.
std::vector<std::vector<double>> lattice_starts(std::size_t ndim, const Bounds& bounds,
                                                const LatticeOptions& options);

/// Every constituent Nelder-Mead run of the ensemble, in start order.
std::vector<OptimizeResult> lattice_runs(const Objective& f, std::size_t ndim, const Bounds& bounds,
                                         const LatticeOptions& options = {});

/// Best run of the ensemble; the first start wins ties. evals is the total.
OptimizeResult lattice(const Objective& f, std::size_t ndim, const Bounds& bounds,
                       const LatticeOptions& options = {});

// ---------------------------------------------------------------------------
// termination

/// Snapshot of an iterative solver used to decide whether to stop.
struct SolverState {
    /// Best objective after each generation, generation 0 first.
    std::vector<double> best_history;
    std::size_t evals = 0;
    std::size_t generations = 0;
    std::size_t max_evals = std::numeric_limits<std::size_t>::max();
    std::size_t max_generations = std::numeric_limits<std::size_t>::max();
};

class Termination {
public:
    enum class Kind { ChangeOverGeneration, ValueTargetReached, Or, EvaluationBudget };

    /// Fires when the best value moved by at most tol over the last ngen generations.
    static Termination change_over_generation(double tol = 1e-6, std::size_t ngen = 10);
    /// Fires when the best value is at most target + tol.
    static Termination value_target_reached(double tol, double target);
    /// Fires when any child fires.
    static Termination any_of(std::vector<Termination> children);
    /// Fires when the generation or evaluation limit is reached.
    static Termination evaluation_budget();

    Kind kind() const { return kind_; }
    double tol() const { return tol_; }
    std::size_t ngen() const { return ngen_; }
    double target() const { return target_; }
    const std::vector<Termination>& children() const { return children_; }

    std::string describe() const;

private:
    Kind kind_ = Kind::EvaluationBudget;
    double tol_ = 0.0;
    std::size_t ngen_ = 1;
    double target_ = 0.0;
    std::vector<Termination> children_;
};

struct TerminationDecision {
    bool stop = false;
    /// Name of the rule that fired; empty when stop is false.
    std::string reason;
};

TerminationDecision check_termination(const SolverState& state, const Termination& rule);

// ---------------------------------------------------------------------------
// differential evolution

struct DeConfig {
    std::size_t npop = 10;
    std::size_t maxiter = 1000;
    std::size_t maxfun = 1000000;
    double crossover = 0.9;
    double scaling = 0.4;
    std::uint64_t seed = 0;
};

/// Complete solver state, written after a run and accepted to resume one.
struct DeCheckpoint {
    std::vector<std::vector<double>> population;
    std::vector<double> fitness;
    std::vector<double> best_x;
    double best_f = std::numeric_limits<double>::infinity();
    std::vector<double> best_history;
    std::size_t generation = 0;
    std::size_t evals = 0;
    std::uint64_t seed = 0;
    /// Textual engine state (operator<< of std::mt19937_64).
    std::string rng_state;
};

struct GenerationReport {
    std::size_t generation;
    std::span<const double> best_x;
    double best_f;
};

using GenerationMonitor = std::function<void(const GenerationReport&)>;

struct DeResult {
    std::vector<double> x;
    double f = std::numeric_limits<double>::infinity();
    std::size_t evals = 0;
    std::size_t generations = 0;
    std::string termination_reason;
    DeCheckpoint checkpoint;
};

/// DE/rand/1/bin. Each generation builds one trial per member from the
/// population as it stood at the start of the generation, then a trial
/// replaces its parent only when strictly better. Every candidate passes
/// through `constraints` and then bound clipping before evaluation. The
/// evaluation and generation limits of `cfg` always apply in addition to
/// `termination`.
DeResult differential_evolution(const Objective& f, const Bounds& bounds, const DeConfig& cfg,
                                const VectorTransform& constraints, const Termination& termination,
                                const GenerationMonitor& monitor = {},
                                const DeCheckpoint* resume = nullptr);

void save_checkpoint(const DeCheckpoint& checkpoint, const std::string& path);
DeCheckpoint load_checkpoint(const std::string& path);

} // namespace ouq
