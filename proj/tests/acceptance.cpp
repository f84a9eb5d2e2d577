// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "ouq/bounds.hpp"
#include "ouq/burgers.hpp"
#include "ouq/sampling.hpp"

#ifndef OUQ_PROPERTY_SUITE
#error "OUQ_PROPERTY_SUITE must name the property test executable"
#endif

using namespace ouq;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

int failures = 0;

void report(int id, const std::string& title, const std::function<void(Verdict&)>& body)
{
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(v);
    } catch (const std::exception& e) {
        v.pass = false;
        v.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!v.pass) ++failures;
    std::printf("%s criterion %2d: %s%s (%.1fs)\n", v.pass ? "PASS" : "FAIL", id, title.c_str(), v.detail.str().c_str(),
                secs);
    std::fflush(stdout);
}

// Boundary equations written out independently of the library.
double fit_of(double v, double delta, double z, double a)
{
    const double r1 = a * std::tanh(a / (2.0 * v) * (1.0 - z)) - 1.0;
    const double r2 = a * std::tanh(a / (2.0 * v) * (1.0 + z)) - 1.0 - delta;
    return std::abs(r1) + std::abs(r2);
}

// positive a solving the first equation at z
double a_from_z(double v, double z)
{
    double lo = 0.0;
    double hi = 10.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (mid * std::tanh(mid / (2.0 * v) * (1.0 - z)) < 1.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

struct ReferenceCell {
    double v;
    double delta;
    double z;
};

const std::vector<ReferenceCell> kReferenceGrid = {
    {0.1, 1e-1, 0.72322525},  {0.1, 1e-2, 0.47492741},  {0.1, 1e-3, 0.24142361},  {0.1, 1e-4, 0.05266962},
    {0.1, 1e-5, 0.00550856},  {0.1, 0.0, 0.0},          {0.05, 1e-1, 0.86161262}, {0.05, 1e-2, 0.73746015},
    {0.05, 1e-3, 0.62030957}, {0.05, 1e-4, 0.50487264}, {0.05, 1e-5, 0.38970223}, {0.05, 0.0, 0.0},
};

// moments of the n = 100000 reference sample at v = 0.1, eps = 0.1, uniform delta
const Targets kTargets = {0.61442027, 0.10501165, 0.04994279, 0.02891048, 100000};

const std::vector<int> kDx = {0, 5, 10, 15};

struct McKey {
    double v;
    double eps;
    DeltaDistribution::Kind dist;
    bool operator<(const McKey& o) const { return std::tie(v, eps, dist) < std::tie(o.v, o.eps, o.dist); }
};

std::map<McKey, SampleSet> mc_runs;

const SampleSet& mc_cell(double v, double eps, DeltaDistribution::Kind dist)
{
    const McKey key{v, eps, dist};
    auto it = mc_runs.find(key);
    if (it != mc_runs.end()) return it->second;
    McConfig c;
    c.v = v;
    c.eps = eps;
    c.dist = dist;
    c.n = 10000;
    c.seed = 20240601;
    c.workers = 0;
    return mc_runs.emplace(key, mc_run(c)).first->second;
}

OuqProblem bound_problem(ConstraintKind kind)
{
    OuqProblem p;
    p.v = 0.1;
    p.eps = 0.1;
    p.nx = 3;
    p.z_mean_ref = kTargets.z_mean;
    p.constraints = ConstraintSet::from_targets(kind, kTargets);
    p.solver.npop = 40;
    p.solver.seed = 1;
    // the objective is piecewise constant, so ten flat generations stop too early
    p.ngen = 60;
    return p;
}

std::map<ConstraintKind, std::vector<SweepRow>> sweeps;

const std::vector<SweepRow>& sweep(ConstraintKind kind)
{
    auto it = sweeps.find(kind);
    if (it != sweeps.end()) return it->second;
    return sweeps.emplace(kind, bound_sweep(bound_problem(kind), kDx, 0)).first->second;
}

std::string fmt(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return buf;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// file contents after the leading comment line
std::string body(const fs::path& p)
{
    const std::string t = slurp(p);
    if (t.rfind("#", 0) != 0) return t;
    return t.substr(t.find('\n') + 1);
}

int run_cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "burgers-ouq");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out;
    std::ostringstream err;
    return ouq::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
}

} // namespace

int main()
{
    report(1, "transition layer on the reference (v, delta) grid", [](Verdict& v) {
        double worst = 0.0;
        for (const auto& c : kReferenceGrid) {
            const auto sol = burgers::solve_best({c.v, c.delta});
            const double err = c.delta == 0.0 ? std::abs(sol.z_star) : std::abs(sol.z_star - c.z);
            worst = std::max(worst, err);
            v.require(err <= 1e-6, "v=" + fmt(c.v) + " delta=" + fmt(c.delta) + " z*=" + fmt(sol.z_star));
        }
        v.detail << " 12 cells, max |z* - table| = " << fmt(worst);
    });

    report(2, "residual quality of accepted solves", [](Verdict& v) {
        const burgers::SolveConfig cfg;
        std::size_t accepted = 0;
        double worst = 0.0;
        for (double visc : {0.1, 0.05}) {
            for (int i = 0; i <= 1000; ++i) {
                const double delta = 0.1 * i / 1000.0;
                const auto sol = burgers::solve_best({visc, delta}, cfg);
                if (sol.fit > cfg.accept_tol) continue;
                ++accepted;
                const double f = fit_of(visc, delta, sol.z_star, sol.a);
                worst = std::max(worst, f);
                v.require(f <= 1e-9, "v=" + fmt(visc) + " delta=" + fmt(delta));
            }
        }
        v.require(accepted > 0, "no accepted solves");
        v.detail << " " << accepted << " grid solves, max |r1|+|r2| = " << fmt(worst);
    });

    report(3, "MC moments at n=10000 (v=0.05, eps=0.1)", [](Verdict& v) {
        const auto zu = moments(z_values(mc_cell(0.05, 0.1, DeltaDistribution::Kind::Uniform)));
        const auto zg = moments(z_values(mc_cell(0.05, 0.1, DeltaDistribution::Kind::TruncGauss)));
        v.require(std::abs(zu.mean - 0.8074) <= 0.01, "uniform mean");
        v.require(std::abs(zu.std - 0.0525) <= 0.01, "uniform std");
        v.require(std::abs(zg.mean - 0.8141) <= 0.01, "truncgauss mean");
        v.detail << " U: mean " << fmt(zu.mean) << " std " << fmt(zu.std) << "; G: mean " << fmt(zg.mean);
    });

    report(4, "KS test of drawn delta at the 1% level (n=10000)", [](Verdict& v) {
        const std::size_t n = 10000;
        for (const auto& d : {DeltaDistribution::uniform(0.1), DeltaDistribution::trunc_gauss(0.1)}) {
            const auto x = draw(d, n, 20240601);
            const double ks = ks_statistic(x, [&](double t) { return d.cdf(t); });
            v.require(ks <= ks_critical_1pct(n), d.name());
            v.detail << " " << d.name() << " D=" << fmt(ks);
        }
        v.detail << " (critical " << fmt(ks_critical_1pct(n)) << ")";
    });

    report(5, "miss rate <= 0.1% of draws over six (v, eps) cells", [](Verdict& v) {
        std::size_t misses = 0;
        std::size_t draws = 0;
        double worst = 0.0;
        for (auto dist : {DeltaDistribution::Kind::Uniform, DeltaDistribution::Kind::TruncGauss}) {
            for (double visc : {0.05, 0.1}) {
                for (double eps : {0.1, 0.01, 0.001}) {
                    const auto& s = mc_cell(visc, eps, dist);
                    const double rate = static_cast<double>(s.miss_count) / static_cast<double>(s.draws);
                    worst = std::max(worst, rate);
                    v.require(rate <= 1e-3, "v=" + fmt(visc) + " eps=" + fmt(eps));
                    v.require(s.records.size() == 10000, "record count");
                    misses += s.miss_count;
                    draws += s.draws;
                    // spot re-verification of one record in a hundred
                    for (std::size_t i = 0; i < s.records.size(); i += 100) {
                        const auto& r = s.records[i];
                        v.require(fit_of(visc, r.delta, r.z, a_from_z(visc, r.z)) <= 1e-9, "record recheck");
                    }
                }
            }
        }
        v.detail << " " << misses << " misses in " << draws << " draws, worst cell rate " << fmt(worst);
    });

    report(6, "p_success non-increasing over dx = 0..15", [](Verdict& v) {
        for (const auto& [key, s] : mc_runs) {
            double prev = 1.0;
            for (int dx = 0; dx <= 15; ++dx) {
                const double p = p_success(s, dx);
                v.require(p <= prev, "v=" + fmt(key.v) + " eps=" + fmt(key.eps) + " dx=" + std::to_string(dx));
                prev = p;
            }
        }
        v.detail << " " << mc_runs.size() << " sample sets";
    });

    report(7, "OUQ bounds dominate 50 x n=2000 MC estimates", [](Verdict& v) {
        McConfig c;
        c.v = 0.1;
        c.eps = 0.1;
        c.n = 2000;
        c.seed = 7;
        c.workers = 0;
        const auto mc = mc_bound_estimate(c, 50, kDx);
        for (auto kind : {ConstraintKind::MeanDelta, ConstraintKind::MeanDeltaMeanZ}) {
            const auto& rows = sweep(kind);
            v.detail << " " << to_string(kind) << ":";
            for (std::size_t i = 0; i < rows.size(); ++i) {
                const auto& r = rows[i];
                const std::string tag = to_string(kind) + " dx=" + std::to_string(r.dx);
                v.require(r.lower.has_value(), tag + " lower: " + r.lower_error);
                v.require(r.upper.has_value(), tag + " upper: " + r.upper_error);
                if (!r.lower || !r.upper) continue;
                v.require(r.lower->value <= mc[i].min, tag + " lower");
                v.require(r.upper->value >= mc[i].max, tag + " upper");
                v.detail << " dx" << r.dx << " [" << fmt(r.lower->value) << " <= " << fmt(mc[i].min) << ", "
                         << fmt(mc[i].max) << " <= " << fmt(r.upper->value) << "]";
            }
        }
    });

    report(8, "added constraints never widen the bounds by more than 1e-3", [](Verdict& v) {
        const std::pair<ConstraintKind, ConstraintKind> pairs[] = {
            {ConstraintKind::MeanDelta, ConstraintKind::MeanDeltaVarDelta},
            {ConstraintKind::MeanZ, ConstraintKind::MeanDeltaMeanZ}};
        double worst = -1.0;
        for (const auto& [loose, tight] : pairs) {
            const auto& a = sweep(loose);
            const auto& b = sweep(tight);
            for (std::size_t i = 0; i < a.size(); ++i) {
                const std::string tag = to_string(loose) + " -> " + to_string(tight) + " dx=" + std::to_string(a[i].dx);
                const bool complete = a[i].lower && a[i].upper && b[i].lower && b[i].upper;
                v.require(complete, tag + " missing bound");
                if (!complete) continue;
                const double widen_lo = a[i].lower->value - b[i].lower->value;
                const double widen_hi = b[i].upper->value - a[i].upper->value;
                worst = std::max({worst, widen_lo, widen_hi});
                v.require(widen_lo <= 1e-3, tag + " lower widened by " + fmt(widen_lo));
                v.require(widen_hi <= 1e-3, tag + " upper widened by " + fmt(widen_hi));
            }
        }
        v.detail << " largest widening " << fmt(worst);

        // closed form under the z mean constraint alone: mass at z* just above
        // the threshold and the rest at delta = 0, where z* = 0
        const auto& mz = sweep(ConstraintKind::MeanZ);
        const double band = meanconf(kTargets.z_std, kTargets.n);
        double gap = 0.0;
        for (const auto& r : mz) {
            if (!r.upper) continue;
            const double exact = std::min(1.0, (kTargets.z_mean + band) / ((1.0 + r.dx / 100.0) * kTargets.z_mean));
            gap = std::max(gap, std::abs(r.upper->value - exact));
            v.require(r.upper->value <= exact + 1e-9, "mean-z upper exceeds its closed form");
        }
        v.detail << "; mean-z upper within " << fmt(gap) << " of closed form";
    });

    report(9, "feasibility certificates of every extremizing measure", [](Verdict& v) {
        std::size_t checked = 0;
        for (auto& [kind, rows] : sweeps) {
            const OuqProblem p = bound_problem(kind);
            const auto& k = p.constraints;
            for (const auto& row : rows) {
                for (const auto* r : {&row.lower, &row.upper}) {
                    if (!*r) continue;
                    ++checked;
                    const auto& m = (*r)->measure[0];
                    double mass = 0.0;
                    for (double w : m.weights()) mass += w;
                    double dm = 0.0;
                    double zm = 0.0;
                    for (std::size_t i = 0; i < m.size(); ++i) {
                        const double x = m.positions()[i];
                        dm += m.weights()[i] / mass * x;
                        zm += m.weights()[i] / mass * burgers::solve_best({p.v, x}, p.solve).z_star;
                        v.require(x >= 0.0 && x <= p.eps, "position outside [0, eps]");
                    }
                    double var = 0.0;
                    for (std::size_t i = 0; i < m.size(); ++i)
                        var += m.weights()[i] / mass * (m.positions()[i] - dm) * (m.positions()[i] - dm);
                    const std::string tag = to_string(kind) + " dx=" + std::to_string(row.dx);
                    v.require(std::abs(mass - 1.0) <= 1e-10, tag + " mass");
                    if (k.d_mean) v.require(std::abs(dm - *k.d_mean) <= k.d_range + 1e-12, tag + " mean(delta)");
                    if (k.d_std)
                        v.require(std::abs(std::sqrt(var) - *k.d_std) <= k.d_std_range + 1e-12, tag + " std(delta)");
                    if (k.z_mean) v.require(std::abs(zm - *k.z_mean) <= k.z_range + 1e-12, tag + " E[z]");
                    v.require((*r)->feasible, tag + " flagged infeasible");
                }
            }
        }
        v.require(checked == 4 * 2 * kDx.size(), "expected 32 bound results");
        v.detail << " " << checked << " measures re-verified";
    });

    report(10, "measure-algebra property suite", [](Verdict& v) {
        const std::string cmd = std::string("\"") + OUQ_PROPERTY_SUITE + "\" --minimal > /dev/null 2>&1";
        const int rc = std::system(cmd.c_str());
        v.require(rc == 0, "property suite exit status " + std::to_string(rc));
        v.detail << " " << fs::path(OUQ_PROPERTY_SUITE).filename().string() << " exit " << rc;
    });

    report(11, "reruns reproduce byte-identical CSV bodies", [](Verdict& v) {
        const fs::path dir = fs::temp_directory_path() / "ouq_acceptance_rerun";
        fs::remove_all(dir);
        fs::create_directories(dir);
        const auto p = [&](const std::string& f) { return (dir / f).string(); };
        std::ofstream(p("targets.json")) << R"({"z_mean": 0.61442027, "z_std": 0.10501165, "d_mean": 0.04994279,
                                               "d_std": 0.02891048, "N": 100000})";
        const std::vector<std::vector<std::string>> commands = {
            {"table1", "--out", p("table1.csv")},
            {"mc", "--v", "0.1", "--n", "2000", "--dist", "truncgauss", "--seed", "3", "--out", p("samples.csv")},
            {"cdf", "--in", p("samples.csv"), "--subsample", "500", "--out", p("cdf.csv")},
            {"pof", "--in", p("samples.csv"), "--out", p("pof.csv")},
            {"mc-bounds", "--n", "300", "--repeats", "4", "--out", p("mc_bounds.csv")},
            {"ouq", "--targets", p("targets.json"), "--constraints", "mean-delta", "--dx", "0", "--dx", "10", "--out",
             p("bounds.csv")},
        };
        for (const auto& args : commands) {
            const std::string out = args.back();
            v.require(run_cli(args) == 0, args[0] + " first run");
            const std::string first = body(out);
            v.require(run_cli(args) == 0, args[0] + " second run");
            v.require(body(out) == first, args[0] + " repeated run differs");
            fs::remove(out);
            v.require(run_cli({"--config", out + ".config.ini", args[0]}) == 0, args[0] + " config rerun");
            v.require(body(out) == first, args[0] + " config rerun differs");
            v.require(!first.empty(), args[0] + " empty output");
        }
        // worker count is not part of the result
        v.require(run_cli({"mc", "--v", "0.1", "--n", "2000", "--dist", "truncgauss", "--seed", "3", "--workers", "1",
                       "--out", p("samples1.csv")}) == 0,
                  "single-worker mc");
        v.require(body(p("samples1.csv")) == body(p("samples.csv")), "mc output depends on worker count");
        v.detail << " " << commands.size() << " commands rerun directly and from recorded config";
        fs::remove_all(dir);
    });

    std::printf("%s: %d of 11 criteria failed\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
    return failures == 0 ? 0 : 1;
}
