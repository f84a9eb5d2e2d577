#include "ouq/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "ouq/errors.hpp"
#include "ouq/sampling.hpp"
#include "ouq/serialize.hpp"

namespace ouq {

double meanconf(double std, std::size_t n)
{
    if (!(std >= 0.0)) throw std::invalid_argument("meanconf: std must be non-negative");
    if (n == 0) throw std::invalid_argument("meanconf: n must be at least 1");
    return 1.96 * std / std::sqrt(static_cast<double>(n));
}

int minmax(Direction d)
{
    return d == Direction::Upper ? -1 : 1;
}

std::string to_string(Direction d)
{
    return d == Direction::Upper ? "upper" : "lower";
}

Direction parse_direction(const std::string& name)
{
    if (name == "upper") return Direction::Upper;
    if (name == "lower") return Direction::Lower;
    throw std::invalid_argument("unknown direction '" + name + "' (expected upper or lower)");
}

std::string to_string(ConstraintKind k)
{
    switch (k) {
    case ConstraintKind::MeanDelta: return "mean-delta";
    case ConstraintKind::MeanDeltaVarDelta: return "mean-delta-var-delta";
    case ConstraintKind::MeanZ: return "mean-z";
    case ConstraintKind::MeanDeltaMeanZ: return "mean-delta-mean-z";
    }
    return "?";
}

ConstraintKind parse_constraint_kind(const std::string& name)
{
    for (auto k : {ConstraintKind::MeanDelta, ConstraintKind::MeanDeltaVarDelta, ConstraintKind::MeanZ,
                   ConstraintKind::MeanDeltaMeanZ}) {
        if (to_string(k) == name) return k;
    }
    throw std::invalid_argument("unknown constraint set '" + name +
                                "' (expected mean-delta, mean-delta-var-delta, mean-z or mean-delta-mean-z)");
}

Targets load_targets(const std::string& path)
{
    const auto j = read_json_file(path);
    Targets t;
    t.z_mean = j.at("z_mean").get<double>();
    t.z_std = j.at("z_std").get<double>();
    t.d_mean = j.at("d_mean").get<double>();
    t.d_std = j.at("d_std").get<double>();
    t.n = j.at("N").get<std::size_t>();
    return t;
}

namespace {

bool uses_delta_mean(ConstraintKind k)
{
    return k != ConstraintKind::MeanZ;
}

bool uses_delta_std(ConstraintKind k)
{
    return k == ConstraintKind::MeanDeltaVarDelta;
}

bool uses_z_mean(ConstraintKind k)
{
    return k == ConstraintKind::MeanZ || k == ConstraintKind::MeanDeltaMeanZ;
}

} // namespace

ConstraintSet ConstraintSet::from_targets(ConstraintKind kind, const Targets& t)
{
    ConstraintSet c;
    c.kind = kind;
    if (uses_delta_mean(kind)) {
        c.d_mean = t.d_mean;
        c.d_range = meanconf(t.d_std, t.n);
    }
    if (uses_delta_std(kind)) {
        c.d_std = t.d_std;
        c.d_std_range = meanconf(t.d_std, t.n);
    }
    if (uses_z_mean(kind)) {
        c.z_mean = t.z_mean;
        c.z_range = meanconf(t.z_std, t.n);
    }
    return c;
}

void ConstraintSet::validate() const
{
    if (uses_delta_mean(kind) && !d_mean) throw std::invalid_argument(to_string(kind) + ": missing delta mean target");
    if (uses_delta_std(kind) && !d_std) throw std::invalid_argument(to_string(kind) + ": missing delta std target");
    if (uses_z_mean(kind) && !z_mean) throw std::invalid_argument(to_string(kind) + ": missing z mean target");
    if (!(d_range >= 0.0 && d_std_range >= 0.0 && z_range >= 0.0))
        throw std::invalid_argument("constraint bands must be non-negative");
    if (d_std && !(*d_std >= 0.0)) throw std::invalid_argument("delta std target must be non-negative");
}

void OuqProblem::validate() const
{
    burgers::Params{v, 0.0}.validate();
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    if (nx == 0) throw std::invalid_argument("nx must be at least 1");
    if (dx_percent < 0 || dx_percent > 15) throw std::invalid_argument("dx must lie in [0, 15]");
    if (!(z_mean_ref > 0.0)) throw std::invalid_argument("z_mean_ref must be positive");
    if (!(tol >= 0.0)) throw std::invalid_argument("tol must be non-negative");
    if (ngen == 0) throw std::invalid_argument("ngen must be at least 1");
    if (solver.npop < 4) throw std::invalid_argument("npop must be at least 4");
    constraints.validate();
    if (constraints.d_mean && !(*constraints.d_mean >= 0.0 && *constraints.d_mean <= eps))
        throw std::invalid_argument("delta mean target outside [0, eps]");
}

double OuqProblem::threshold() const
{
    return (100.0 + dx_percent) / 100.0 * z_mean_ref;
}

ParamLayout OuqProblem::layout() const
{
    return ParamLayout{{nx}};
}

Bounds OuqProblem::bounds() const
{
    std::vector<double> lo(2 * nx, 0.0);
    std::vector<double> hi(2 * nx, 1.0);
    std::fill(hi.begin() + static_cast<std::ptrdiff_t>(nx), hi.end(), eps);
    return Bounds(std::move(lo), std::move(hi));
}

ZStarModel::ZStarModel(double v, burgers::SolveConfig cfg) : v_(v), cfg_(cfg)
{
    burgers::Params{v, 0.0}.validate();
}

const burgers::Solution& ZStarModel::solve(double delta)
{
    const long long key = std::llround(delta * 1e12);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const auto sol = burgers::solve_best({v_, delta}, cfg_);
    if (sol.fit > cfg_.accept_tol) missed_.push_back(delta);
    return cache_.emplace(key, sol).first->second;
}

PointPredicate failure_indicator(const OuqProblem& problem, ZStarModel& model)
{
    const double threshold = problem.threshold();
    return [&model, threshold](std::span<const double> x) {
        if (!model.accepted(x[0])) return true;
        return !(model.z(x[0]) > threshold);
    };
}

double success_probability(const OuqProblem& problem, ZStarModel& model, const ProductMeasure& pm)
{
    const auto failure = failure_indicator(problem, model);
    return pof(pm, [&failure](std::span<const double> x) { return !failure(x); });
}

double ConstraintResidual::residual() const
{
    return value - target;
}

bool ConstraintResidual::ok() const
{
    // slack for renormalization round-off
    return std::abs(value - target) <= band + 1e-12;
}

std::vector<ConstraintResidual> constraint_residuals(const OuqProblem& problem, ZStarModel& model,
                                                     const ProductMeasure& pm)
{
    const auto& c = problem.constraints;
    std::vector<ConstraintResidual> out;
    if (c.d_mean) out.push_back({"mean(delta)", mean(pm[0]), *c.d_mean, c.d_range});
    if (c.d_std) out.push_back({"std(delta)", std_dev(pm[0]), *c.d_std, c.d_std_range});
    if (c.z_mean) {
        const double ez = expect(pm, [&model](std::span<const double> x) { return model.z(x[0]); });
        out.push_back({"E[z]", ez, *c.z_mean, c.z_range});
    }
    return out;
}

namespace {

constexpr std::size_t kMaxSpreadIterations = 50;

bool within(double value, double target, double band)
{
    return std::abs(value - target) <= band;
}

DiscreteMeasure clip_positions(const DiscreteMeasure& m, double lo, double hi)
{
    std::vector<double> x(m.positions().begin(), m.positions().end());
    for (double& p : x) p = std::clamp(p, lo, hi);
    return DiscreteMeasure(std::vector<double>(m.weights().begin(), m.weights().end()), std::move(x));
}

DiscreteMeasure impose_delta_mean(const OuqProblem& problem, const DiscreteMeasure& m)
{
    const auto& c = problem.constraints;
    if (within(mean(m), *c.d_mean, c.d_range)) return m;
    return set_mean_within(m, *c.d_mean, 0.0, problem.eps);
}

// Scaling about the mean can push points out of the box; clipping then moves
// the mean, so alternate until both bands hold.
DiscreteMeasure impose_delta_spread(const OuqProblem& problem, DiscreteMeasure m)
{
    const auto& c = problem.constraints;
    for (std::size_t i = 0; i < kMaxSpreadIterations; ++i) {
        const bool std_ok = within(std_dev(m), *c.d_std, c.d_std_range);
        if (std_ok && within(mean(m), *c.d_mean, c.d_range)) return m;
        if (!std_ok) m = clip_positions(set_std(m, *c.d_std), 0.0, problem.eps);
        m = impose_delta_mean(problem, m);
    }
    throw InfeasibleConstraint("could not impose mean and std on delta");
}

} // namespace

std::vector<double> constraints_transform(const OuqProblem& problem, ZStarModel& model,
                                          std::span<const double> rv)
{
    // trial vectors arrive before bound clipping
    std::vector<double> x(rv.begin(), rv.end());
    problem.bounds().clip(x);
    ProductMeasure pm = normalize(load(x, problem.layout()));
    const auto& c = problem.constraints;

    switch (c.kind) {
    case ConstraintKind::MeanDelta:
        pm = pm.with(0, impose_delta_mean(problem, pm[0]));
        break;
    case ConstraintKind::MeanDeltaVarDelta:
        pm = pm.with(0, impose_delta_spread(problem, pm[0]));
        break;
    case ConstraintKind::MeanZ:
    case ConstraintKind::MeanDeltaMeanZ: {
        MeasureTransform inner;
        if (c.kind == ConstraintKind::MeanDeltaMeanZ) {
            pm = pm.with(0, impose_delta_mean(problem, pm[0]));
            inner = [&problem](ProductMeasure m) { return m.with(0, impose_delta_mean(problem, m[0])); };
        }
        const std::pair<double, double> box{0.0, problem.eps};
        pm = set_expect(
            pm, [&model](std::span<const double> x) { return model.z(x[0]); }, *c.z_mean, c.z_range,
            std::span(&box, 1), inner, problem.expect);
        break;
    }
    }
    return flatten(pm);
}

double objective(const OuqProblem& problem, ZStarModel& model, std::span<const double> rv)
{
    constexpr double sentinel = std::numeric_limits<double>::infinity();
    try {
        const ProductMeasure pm = normalize(load(rv, problem.layout()));
        for (const auto& r : constraint_residuals(problem, model, pm)) {
            if (!r.ok()) return sentinel;
        }
        return minmax(problem.direction) * success_probability(problem, model, pm);
    } catch (const Error&) {
        return sentinel;
    }
}

BoundResult solve_bound(const OuqProblem& problem)
{
    problem.validate();
    ZStarModel model(problem.v, problem.solve);

    const auto f = [&](std::span<const double> rv) { return objective(problem, model, rv); };
    const auto constrain = [&](std::span<const double> rv) {
        try {
            return constraints_transform(problem, model, rv);
        } catch (const Error&) {
            // left as is; the objective rejects it
            return std::vector<double>(rv.begin(), rv.end());
        }
    };
    const double target = problem.direction == Direction::Upper ? -1.0 : 0.0;
    const auto rule = Termination::any_of({Termination::change_over_generation(problem.tol, problem.ngen),
                                           Termination::value_target_reached(problem.tol, target)});

    const DeResult de = differential_evolution(f, problem.bounds(), problem.solver, constrain, rule);
    if (!std::isfinite(de.f)) {
        throw InfeasibleConstraint("no feasible measure found in " + std::to_string(de.evals) + " evaluations (" +
                                   to_string(problem.constraints.kind) + ", " + to_string(problem.direction) +
                                   ", dx=" + std::to_string(problem.dx_percent) + ")");
    }

    BoundResult out;
    out.measure = normalize(load(de.x, problem.layout()));
    out.value = std::clamp(minmax(problem.direction) * de.f, 0.0, 1.0);
    out.evals = de.evals;
    out.generations = de.generations;
    out.termination_reason = de.termination_reason;
    out.residuals = constraint_residuals(problem, model, out.measure);
    out.feasible = std::all_of(out.residuals.begin(), out.residuals.end(), [](const auto& r) { return r.ok(); }) &&
                   std::abs(out.measure[0].mass() - 1.0) <= 1e-10 &&
                   std::all_of(out.measure[0].positions().begin(), out.measure[0].positions().end(),
                               [&](double x) { return x >= 0.0 && x <= problem.eps; });
    out.model_solves = model.solves();
    out.missed_deltas = model.missed_deltas();
    out.checkpoint = de.checkpoint;
    if (!problem.checkpoint_path.empty()) save_checkpoint(de.checkpoint, problem.checkpoint_path);
    return out;
}

std::vector<SweepRow> bound_sweep(const OuqProblem& problem, std::span<const int> dx_list, std::size_t workers,
                                  const std::vector<Direction>& directions)
{
    std::vector<SweepRow> rows(dx_list.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i].dx = dx_list[i];

    const std::size_t nd = directions.size();
    parallel_for(nd * rows.size(), workers, [&](std::size_t job) {
        SweepRow& row = rows[job / nd];
        const Direction d = directions[job % nd];
        OuqProblem p = problem;
        p.dx_percent = row.dx;
        p.direction = d;
        p.checkpoint_path.clear();
        const bool upper = d == Direction::Upper;
        try {
            (upper ? row.upper : row.lower) = solve_bound(p);
        } catch (const std::exception& e) {
            (upper ? row.upper_error : row.lower_error) = e.what();
        }
    });
    return rows;
}

namespace {

std::string real_or_nan(const std::optional<BoundResult>& r)
{
    return r ? format_real(r->value) : "nan";
}

} // namespace

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path, const std::string& comment)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    if (!comment.empty()) out << "# " << comment << '\n';
    out << "dx,lower,upper,evals_lower,evals_upper\n";
    for (const auto& r : rows) {
        out << r.dx << ',' << real_or_nan(r.lower) << ',' << real_or_nan(r.upper) << ','
            << (r.lower ? r.lower->evals : 0) << ',' << (r.upper ? r.upper->evals : 0) << '\n';
    }
    if (!out) throw std::runtime_error("failed writing " + path);
}

} // namespace ouq
