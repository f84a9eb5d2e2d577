#include "cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ouq/bounds.hpp"
#include "ouq/burgers.hpp"
#include "ouq/errors.hpp"
#include "ouq/sampling.hpp"
#include "ouq/serialize.hpp"

namespace fs = std::filesystem;

namespace ouq::cli {

std::string config_hash(const std::string& text)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

std::string fmt(double x)
{
    return format_real(x);
}

std::vector<int> all_dx()
{
    std::vector<int> dx(16);
    std::iota(dx.begin(), dx.end(), 0);
    return dx;
}

struct SolverFlags {
    std::size_t nbins = 4;
    double ftol = 1e-8;
    double accept_tol = 1e-9;

    void add(CLI::App* app)
    {
        app->add_option("--nbins", nbins, "Nelder-Mead runs in the lattice")
            ->capture_default_str()
            ->check(CLI::PositiveNumber);
        app->add_option("--ftol", ftol, "Nelder-Mead value tolerance")->capture_default_str()->check(CLI::PositiveNumber);
        app->add_option("--accept-tol", accept_tol, "largest accepted |r1| + |r2|")
            ->capture_default_str()
            ->check(CLI::NonNegativeNumber);
    }

    burgers::SolveConfig config() const
    {
        burgers::SolveConfig c;
        c.nbins = nbins;
        c.ftol = ftol;
        c.accept_tol = accept_tol;
        return c;
    }
};

struct McFlags {
    double v = 0.1;
    double eps = 0.1;
    std::size_t n = 10000;
    std::string dist = "uniform";
    std::uint64_t seed = 0;
    double padding = 1.1;
    SolverFlags solver;

    void add(CLI::App* app)
    {
        app->add_option("--v", v, "viscosity")->capture_default_str()->check(CLI::PositiveNumber);
        app->add_option("--eps", eps, "perturbations are drawn on [0, eps]")
            ->capture_default_str()
            ->check(CLI::PositiveNumber);
        app->add_option("--n", n, "accepted samples per run")->capture_default_str()->check(CLI::PositiveNumber);
        app->add_option("--dist", dist, "perturbation law")
            ->capture_default_str()
            ->check(CLI::IsMember({"uniform", "truncgauss"}));
        app->add_option("--seed", seed, "random seed")->capture_default_str();
        app->add_option("--padding", padding, "initial draws per requested sample")
            ->capture_default_str()
            ->check(CLI::Range(1.0, 2.0));
        solver.add(app);
    }

    McConfig config(std::size_t workers) const
    {
        McConfig c;
        c.v = v;
        c.eps = eps;
        c.n = n;
        c.dist = DeltaDistribution::parse(dist, eps).kind();
        c.seed = seed;
        c.padding = padding;
        c.accept_tol = solver.accept_tol;
        c.solve = solver.config();
        c.workers = workers;
        return c;
    }
};

class Runner {
public:
    Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

    int run(int argc, const char* const* argv);

private:
    int cmd_solve();
    int cmd_table1();
    int cmd_mc();
    int cmd_cdf();
    int cmd_pof();
    int cmd_mc_bounds();
    int cmd_ouq();

    std::string output_path(const std::string& given, const std::string& default_name) const;
    /// Writes the invoked command's settings next to `path` and returns the
    /// CSV comment line.
    std::string record_config(const std::string& path) const;

    std::ostream& out_;
    std::ostream& err_;
    CLI::App app_{"Transition-layer bounds for the perturbed Burgers' equation", kToolName};
    CLI::App* active_ = nullptr;

    std::string out_dir_;
    std::size_t workers_ = 0;
    std::string out_path_;

    double v_ = 0.1;
    double delta_ = 0.0;
    SolverFlags solver_;
    McFlags mc_;
    std::string in_;
    std::size_t subsample_ = 0;
    std::optional<double> lo_;
    std::optional<double> hi_;
    bool inputs_ = false;
    std::vector<int> dx_ = all_dx();
    std::size_t repeats_ = 50;

    std::string targets_;
    std::size_t nx_ = 3;
    std::string constraints_ = "mean-delta-mean-z";
    std::string direction_ = "both";
    DeConfig de_;
    double tol_ = 1e-6;
    std::size_t ngen_ = 10;
};

std::string Runner::output_path(const std::string& given, const std::string& default_name) const
{
    const fs::path p = given.empty() ? fs::path(out_dir_) / default_name : fs::path(given);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    return p.string();
}

std::string Runner::record_config(const std::string& path) const
{
    const std::string prefix = active_->get_name() + ".";
    std::istringstream all(app_.config_to_str(true, false));
    std::string line;
    std::string section;
    std::string hashed;
    while (std::getline(all, line)) {
        if (line.rfind(prefix, 0) != 0) continue;
        section += line + '\n';
        // neither the destination nor the thread count changes results
        const std::string key = line.substr(prefix.size(), line.find('=') - prefix.size());
        if (key != "out" && key != "workers") hashed += line + '\n';
    }
    std::ofstream cfg(path + ".config.ini");
    cfg << "# rerun with: " << kToolName << " --config " << fs::path(path + ".config.ini").filename().string()
        << ' ' << active_->get_name() << '\n'
        << section;
    if (!cfg) throw std::runtime_error("failed writing " + path + ".config.ini");
    return std::string(kToolName) + " " + kVersion + " config=" + config_hash(hashed);
}

int Runner::run(int argc, const char* const* argv)
{
    app_.set_version_flag("--version", kVersion);
    app_.set_config("--config", "", "read settings from an INI/TOML file");
    const char* env_dir = std::getenv("OUQ_OUTPUT_DIR");
    out_dir_ = env_dir && *env_dir ? env_dir : ".";
    app_.add_option("--out-dir", out_dir_, "directory for default output files (env OUQ_OUTPUT_DIR)");
    app_.require_subcommand(1);

    auto* solve = app_.add_subcommand("solve", "locate the transition layer for one (v, delta)");
    solve->add_option("--v", v_, "viscosity")->required()->check(CLI::PositiveNumber);
    solve->add_option("--delta", delta_, "left-boundary perturbation")->required()->check(CLI::NonNegativeNumber);
    solver_.add(solve);

    auto* table1 = app_.add_subcommand("table1", "transition layer over v in {0.1, 0.05}, delta in {1e-1..1e-5, 0}");
    solver_.add(table1);
    table1->add_option("--out", out_path_, "CSV path (default table1.csv)");

    auto* mc = app_.add_subcommand("mc", "Monte Carlo sample of (z, delta, fit)");
    mc_.add(mc);
    mc->add_option("--workers", workers_, "solver threads (0 = all cores)")->capture_default_str();
    mc->add_option("--out", out_path_, "CSV path (default samples.csv)");

    auto* cdf = app_.add_subcommand("cdf", "empirical CDF of a sample file");
    cdf->add_option("--in", in_, "sample CSV written by mc")->required()->check(CLI::ExistingFile);
    cdf->add_option("--subsample", subsample_, "use this many records chosen without replacement (0 = all)")
        ->capture_default_str();
    cdf->add_option("--seed", mc_.seed, "subsample seed")->capture_default_str();
    cdf->add_option("--lo", lo_, "lower end of the CDF support");
    cdf->add_option("--hi", hi_, "upper end of the CDF support");
    cdf->add_flag("--inputs", inputs_, "CDF of delta instead of z");
    cdf->add_option("--out", out_path_, "CSV path (default cdf.csv)");

    auto* pofc = app_.add_subcommand("pof", "P(success) of a sample file over dx");
    pofc->add_option("--in", in_, "sample CSV written by mc")->required()->check(CLI::ExistingFile);
    pofc->add_option("--dx", dx_, "success thresholds, percent above the mean")
        ->capture_default_str()
        ->check(CLI::Range(0, 15));
    pofc->add_option("--out", out_path_, "CSV path (default pof.csv)");

    auto* bounds = app_.add_subcommand("mc-bounds", "min, mean and max of P(success) over repeated MC runs");
    mc_.add(bounds);
    bounds->add_option("--repeats", repeats_, "independent runs")->capture_default_str()->check(CLI::PositiveNumber);
    bounds->add_option("--dx", dx_, "success thresholds, percent above the mean")
        ->capture_default_str()
        ->check(CLI::Range(0, 15));
    bounds->add_option("--workers", workers_, "solver threads (0 = all cores)")->capture_default_str();
    bounds->add_option("--out", out_path_, "CSV path (default mc_bounds.csv)");

    auto* ouqc = app_.add_subcommand("ouq", "optimal bounds on P(success) over constrained discrete measures");
    ouqc->add_option("--targets", targets_, "JSON with z_mean, z_std, d_mean, d_std, N (an mc sidecar works)")
        ->required()
        ->check(CLI::ExistingFile);
    ouqc->add_option("--v", v_, "viscosity")->capture_default_str()->check(CLI::PositiveNumber);
    ouqc->add_option("--eps", mc_.eps, "support of delta is [0, eps]")->capture_default_str()->check(CLI::PositiveNumber);
    ouqc->add_option("--nx", nx_, "support points")->capture_default_str()->check(CLI::PositiveNumber);
    ouqc->add_option("--constraints", constraints_, "constraint set")
        ->capture_default_str()
        ->check(CLI::IsMember({"mean-delta", "mean-delta-var-delta", "mean-z", "mean-delta-mean-z"}));
    ouqc->add_option("--direction", direction_, "which bounds")
        ->capture_default_str()
        ->check(CLI::IsMember({"upper", "lower", "both"}));
    dx_ = {0};
    ouqc->add_option("--dx", dx_, "success thresholds, percent above the mean")
        ->capture_default_str()
        ->check(CLI::Range(0, 15));
    ouqc->add_option("--seed", de_.seed, "random seed")->capture_default_str();
    ouqc->add_option("--npop", de_.npop, "population size")->capture_default_str()->check(CLI::Range(4, 100000));
    ouqc->add_option("--maxiter", de_.maxiter, "generation limit")->capture_default_str();
    ouqc->add_option("--maxfun", de_.maxfun, "evaluation limit")->capture_default_str();
    ouqc->add_option("--crossover", de_.crossover, "crossover probability")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    ouqc->add_option("--scaling", de_.scaling, "mutation scale")->capture_default_str()->check(CLI::PositiveNumber);
    ouqc->add_option("--tol", tol_, "termination tolerance")->capture_default_str()->check(CLI::NonNegativeNumber);
    ouqc->add_option("--ngen", ngen_, "generations without change before stopping")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    solver_.add(ouqc);
    ouqc->add_option("--workers", workers_, "parallel bound jobs (0 = all cores)")->capture_default_str();
    ouqc->add_option("--out", out_path_, "bounds CSV path (default bounds.csv)");

    // the pof and mc-bounds sweeps default to every dx
    for (auto* c : {pofc, bounds}) c->preparse_callback([this](std::size_t) { dx_ = all_dx(); });

    try {
        app_.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        app_.exit(e, out_, err_);
        return kOk;
    } catch (const CLI::CallForAllHelp& e) {
        app_.exit(e, out_, err_);
        return kOk;
    } catch (const CLI::CallForVersion& e) {
        app_.exit(e, out_, err_);
        return kOk;
    } catch (const CLI::ParseError& e) {
        app_.exit(e, out_, err_);
        return kUsage;
    }

    active_ = app_.get_subcommands().front();
    const std::string name = active_->get_name();
    try {
        if (name == "solve") return cmd_solve();
        if (name == "table1") return cmd_table1();
        if (name == "mc") return cmd_mc();
        if (name == "cdf") return cmd_cdf();
        if (name == "pof") return cmd_pof();
        if (name == "mc-bounds") return cmd_mc_bounds();
        if (name == "ouq") return cmd_ouq();
    } catch (const std::invalid_argument& e) {
        err_ << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        err_ << "error: " << e.what() << '\n';
        return kNumericFailure;
    }
    return kUsage;
}

int Runner::cmd_solve()
{
    const burgers::Params params{v_, delta_};
    const auto cfg = solver_.config();
    const auto sol = burgers::solve_best(params, cfg);
    const bool ok = sol.fit <= cfg.accept_tol;
    out_ << "v,delta,z_star,a,fit,accepted\n"
         << fmt(v_) << ',' << fmt(delta_) << ',' << fmt(sol.z_star) << ',' << fmt(sol.a) << ',' << fmt(sol.fit) << ','
         << ok << '\n';
    if (!ok) {
        err_ << "error: fit " << fmt(sol.fit) << " exceeds accept tolerance " << fmt(cfg.accept_tol) << '\n';
        return kNumericFailure;
    }
    return kOk;
}

int Runner::cmd_table1()
{
    const std::string path = output_path(out_path_, "table1.csv");
    const std::string comment = record_config(path);
    const auto cfg = solver_.config();

    std::ostringstream csv;
    csv << "# " << comment << '\n' << "v,delta,z_star,a,fit,accepted\n";
    int misses = 0;
    for (double v : {0.1, 0.05}) {
        for (double delta : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 0.0}) {
            const auto sol = burgers::solve_best({v, delta}, cfg);
            const bool ok = sol.fit <= cfg.accept_tol;
            misses += !ok;
            csv << fmt(v) << ',' << fmt(delta) << ',' << fmt(sol.z_star) << ',' << fmt(sol.a) << ',' << fmt(sol.fit)
                << ',' << ok << '\n';
        }
    }
    std::ofstream(path) << csv.str();
    out_ << csv.str();
    if (misses > 0) {
        err_ << "error: " << misses << " cell(s) missed the accept tolerance\n";
        return kNumericFailure;
    }
    return kOk;
}

int Runner::cmd_mc()
{
    const std::string path = output_path(out_path_, "samples.csv");
    const std::string comment = record_config(path);
    const SampleSet s = mc_run(mc_.config(workers_));
    write_samples(s, path, comment);

    const auto z = moments(z_values(s));
    const auto d = moments(delta_values(s));
    out_ << "wrote " << path << '\n'
         << "n=" << s.records.size() << " draws=" << s.draws << " misses=" << s.miss_count << '\n'
         << "z_mean=" << fmt(z.mean) << " z_std=" << fmt(z.std) << '\n'
         << "d_mean=" << fmt(d.mean) << " d_std=" << fmt(d.std) << '\n';
    return kOk;
}

int Runner::cmd_cdf()
{
    SampleSet s = read_samples(in_);
    if (subsample_ > 0) s = subsample(s, subsample_, mc_.seed);
    const auto values = inputs_ ? delta_values(s) : z_values(s);
    const auto points = cdf(values, lo_, hi_);
    const auto m = moments(values);

    const std::string path = output_path(out_path_, "cdf.csv");
    const std::string comment = record_config(path);
    std::ofstream csv(path);
    csv << "# " << comment << '\n' << "x,p\n";
    for (std::size_t i = 0; i < points.xs.size(); ++i) csv << fmt(points.xs[i]) << ',' << fmt(points.ys[i]) << '\n';
    if (!csv) throw std::runtime_error("failed writing " + path);

    out_ << "wrote " << path << '\n' << "mean=" << fmt(m.mean) << " std=" << fmt(m.std) << '\n';
    return kOk;
}

int Runner::cmd_pof()
{
    const SampleSet s = read_samples(in_);
    const std::string path = output_path(out_path_, "pof.csv");
    const std::string comment = record_config(path);

    std::ostringstream csv;
    csv << "dx,p_success\n";
    for (int dx : dx_) csv << dx << ',' << fmt(p_success(s, dx)) << '\n';
    std::ofstream(path) << "# " << comment << '\n' << csv.str();
    out_ << csv.str();
    return kOk;
}

int Runner::cmd_mc_bounds()
{
    const std::string path = output_path(out_path_, "mc_bounds.csv");
    const std::string comment = record_config(path);
    const auto est = mc_bound_estimate(mc_.config(workers_), repeats_, dx_);

    std::ostringstream csv;
    csv << "dx,min,mean,max\n";
    for (const auto& e : est) csv << e.dx << ',' << fmt(e.min) << ',' << fmt(e.mean) << ',' << fmt(e.max) << '\n';
    std::ofstream(path) << "# " << comment << '\n' << csv.str();
    out_ << csv.str();
    return kOk;
}

nlohmann::json bound_json(const BoundResult& r, const OuqProblem& p)
{
    nlohmann::json residuals = nlohmann::json::array();
    for (const auto& c : r.residuals) {
        residuals.push_back(
            {{"name", c.name}, {"value", c.value}, {"target", c.target}, {"band", c.band}, {"ok", c.ok()}});
    }
    return {{"direction", to_string(p.direction)},
            {"dx", p.dx_percent},
            {"constraints", to_string(p.constraints.kind)},
            {"value", r.value},
            {"feasible", r.feasible},
            {"evals", r.evals},
            {"generations", r.generations},
            {"termination", r.termination_reason},
            {"residuals", residuals},
            {"missed_deltas", r.missed_deltas},
            {"seed", p.solver.seed},
            {"measure", to_json(r.measure)}};
}

int Runner::cmd_ouq()
{
    const Targets t = load_targets(targets_);
    OuqProblem p;
    p.v = v_;
    p.eps = mc_.eps;
    p.nx = nx_;
    p.z_mean_ref = t.z_mean;
    p.constraints = ConstraintSet::from_targets(parse_constraint_kind(constraints_), t);
    p.solver = de_;
    p.tol = tol_;
    p.ngen = ngen_;
    p.solve = solver_.config();
    p.validate();

    std::vector<Direction> directions;
    if (direction_ != "upper") directions.push_back(Direction::Lower);
    if (direction_ != "lower") directions.push_back(Direction::Upper);

    const std::string path = output_path(out_path_, "bounds.csv");
    const std::string comment = record_config(path);
    const auto rows = bound_sweep(p, dx_, workers_, directions);
    write_sweep_csv(rows, path, comment);

    const fs::path stem = fs::path(path).replace_extension();
    int failures = 0;
    for (const auto& row : rows) {
        for (Direction d : directions) {
            const bool upper = d == Direction::Upper;
            const auto& result = upper ? row.upper : row.lower;
            const std::string tag = stem.string() + ".dx" + std::to_string(row.dx) + "." + to_string(d);
            if (!result) {
                ++failures;
                err_ << "error: dx=" << row.dx << ' ' << to_string(d) << ": "
                     << (upper ? row.upper_error : row.lower_error) << '\n';
                continue;
            }
            OuqProblem q = p;
            q.dx_percent = row.dx;
            q.direction = d;
            write_json_file(bound_json(*result, q), tag + ".measure.json");
            save_checkpoint(result->checkpoint, tag + ".checkpoint.json");
            if (!result->feasible) {
                ++failures;
                err_ << "error: dx=" << row.dx << ' ' << to_string(d) << ": returned measure is not feasible\n";
            }
        }
    }

    std::ifstream written(path);
    out_ << written.rdbuf();
    return failures == 0 ? kOk : kNumericFailure;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    Runner runner(out, err);
    return runner.run(argc, argv);
}

} // namespace ouq::cli
