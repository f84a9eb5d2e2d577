#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "ouq/errors.hpp"
#include "ouq/optimize.hpp"
#include "ouq/rng.hpp"

namespace ouq {

Termination Termination::change_over_generation(double tol, std::size_t ngen)
{
    if (!(tol >= 0.0)) throw std::invalid_argument("ChangeOverGeneration: tol must be non-negative");
    if (ngen < 1) throw std::invalid_argument("ChangeOverGeneration: ngen must be at least 1");
    Termination t;
    t.kind_ = Kind::ChangeOverGeneration;
    t.tol_ = tol;
    t.ngen_ = ngen;
    return t;
}

Termination Termination::value_target_reached(double tol, double target)
{
    if (!(tol >= 0.0)) throw std::invalid_argument("ValueTargetReached: tol must be non-negative");
    Termination t;
    t.kind_ = Kind::ValueTargetReached;
    t.tol_ = tol;
    t.target_ = target;
    return t;
}

Termination Termination::any_of(std::vector<Termination> children)
{
    Termination t;
    t.kind_ = Kind::Or;
    t.children_ = std::move(children);
    return t;
}

Termination Termination::evaluation_budget()
{
    return Termination{};
}

std::string Termination::describe() const
{
    char buf[96];
    switch (kind_) {
    case Kind::ChangeOverGeneration:
        std::snprintf(buf, sizeof buf, "ChangeOverGeneration(%g, %zu)", tol_, ngen_);
        return buf;
    case Kind::ValueTargetReached:
        std::snprintf(buf, sizeof buf, "ValueTargetReached(%g, %g)", tol_, target_);
        return buf;
    case Kind::EvaluationBudget:
        return "EvaluationBudget";
    case Kind::Or: {
        std::string s = "Or(";
        for (std::size_t i = 0; i < children_.size(); ++i) {
            if (i) s += ", ";
            s += children_[i].describe();
        }
        return s + ")";
    }
    }
    return {};
}

TerminationDecision check_termination(const SolverState& state, const Termination& rule)
{
    const auto& h = state.best_history;
    switch (rule.kind()) {
    case Termination::Kind::ChangeOverGeneration:
        if (h.size() > rule.ngen() && std::abs(h.back() - h[h.size() - 1 - rule.ngen()]) <= rule.tol())
            return {true, rule.describe()};
        return {};
    case Termination::Kind::ValueTargetReached:
        if (!h.empty() && h.back() <= rule.target() + rule.tol()) return {true, rule.describe()};
        return {};
    case Termination::Kind::EvaluationBudget:
        if (state.generations >= state.max_generations || state.evals >= state.max_evals)
            return {true, rule.describe()};
        return {};
    case Termination::Kind::Or:
        for (const auto& child : rule.children()) {
            auto d = check_termination(state, child);
            if (d.stop) return d;
        }
        return {};
    }
    return {};
}

DeResult differential_evolution(const Objective& f, const Bounds& bounds, const DeConfig& cfg,
                                const VectorTransform& constraints, const Termination& termination,
                                const GenerationMonitor& monitor, const DeCheckpoint* resume)
{
    const std::size_t n = bounds.size();
    if (n == 0) throw std::invalid_argument("differential_evolution: empty bounds");
    for (std::size_t i = 0; i < n; ++i) {
        if (!bounds.is_finite(i)) throw std::invalid_argument("differential_evolution: bounds must be finite");
    }
    if (cfg.npop < 4) throw std::invalid_argument("differential_evolution: npop must be at least 4");
    if (!(cfg.crossover >= 0.0 && cfg.crossover <= 1.0))
        throw std::invalid_argument("differential_evolution: crossover must lie in [0, 1]");
    if (!(cfg.scaling > 0.0)) throw std::invalid_argument("differential_evolution: scaling must be positive");

    Rng rng(cfg.seed);
    const auto uniform = [&rng] { return rng.uniform(); };
    const auto below = [&rng](std::size_t m) { return static_cast<std::size_t>(rng.below(m)); };

    std::size_t evals = 0;
    const auto prepare = [&](std::vector<double> x) {
        if (constraints) {
            x = constraints(x);
            if (x.size() != n) throw LengthMismatch("differential_evolution: constraints changed the dimension");
        }
        bounds.clip(x);
        return x;
    };
    const auto evaluate = [&](std::span<const double> x) {
        ++evals;
        const double value = f(x);
        return std::isnan(value) ? std::numeric_limits<double>::infinity() : value;
    };

    std::vector<std::vector<double>> pop;
    std::vector<double> fit;
    std::vector<double> best_x;
    double best_f = std::numeric_limits<double>::infinity();
    std::vector<double> history;
    std::size_t generation = 0;

    if (resume) {
        if (resume->population.size() != cfg.npop || resume->fitness.size() != cfg.npop)
            throw LengthMismatch("differential_evolution: checkpoint population does not match npop");
        pop = resume->population;
        fit = resume->fitness;
        best_x = resume->best_x;
        best_f = resume->best_f;
        history = resume->best_history;
        generation = resume->generation;
        evals = resume->evals;
        rng.restore(resume->rng_state);
    } else {
        for (std::size_t i = 0; i < cfg.npop; ++i) {
            std::vector<double> x(n);
            for (std::size_t j = 0; j < n; ++j) x[j] = bounds.lower[j] + (bounds.upper[j] - bounds.lower[j]) * uniform();
            pop.push_back(prepare(std::move(x)));
            fit.push_back(evaluate(pop.back()));
            if (best_x.empty() || fit.back() < best_f) {
                best_f = fit.back();
                best_x = pop.back();
            }
        }
        history.push_back(best_f);
        if (monitor) monitor({generation, best_x, best_f});
    }

    const Termination rule = Termination::any_of({termination, Termination::evaluation_budget()});
    std::string reason;
    std::vector<std::vector<double>> trials(cfg.npop);
    std::vector<double> trial_fit(cfg.npop);

    while (true) {
        const SolverState state{history, evals, generation, cfg.maxfun, cfg.maxiter};
        const auto decision = check_termination(state, rule);
        if (decision.stop) {
            reason = decision.reason;
            break;
        }

        for (std::size_t i = 0; i < cfg.npop; ++i) {
            std::size_t r1, r2, r3;
            do r1 = below(cfg.npop); while (r1 == i);
            do r2 = below(cfg.npop); while (r2 == i || r2 == r1);
            do r3 = below(cfg.npop); while (r3 == i || r3 == r1 || r3 == r2);
            const std::size_t forced = below(n);

            std::vector<double> trial = pop[i];
            for (std::size_t j = 0; j < n; ++j) {
                if (j == forced || uniform() < cfg.crossover)
                    trial[j] = pop[r1][j] + cfg.scaling * (pop[r2][j] - pop[r3][j]);
            }
            trials[i] = prepare(std::move(trial));
            trial_fit[i] = evaluate(trials[i]);
        }

        for (std::size_t i = 0; i < cfg.npop; ++i) {
            if (trial_fit[i] < fit[i]) {
                fit[i] = trial_fit[i];
                pop[i] = trials[i];
                if (fit[i] < best_f) {
                    best_f = fit[i];
                    best_x = pop[i];
                }
            }
        }
        ++generation;
        history.push_back(best_f);
        if (monitor) monitor({generation, best_x, best_f});
    }

    DeResult result;
    result.x = best_x;
    result.f = best_f;
    result.evals = evals;
    result.generations = generation;
    result.termination_reason = reason;
    result.checkpoint = {pop, fit, best_x, best_f, history, generation, evals, cfg.seed, rng.state()};
    return result;
}

} // namespace ouq
