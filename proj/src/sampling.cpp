#include "ouq/sampling.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "ouq/errors.hpp"
#include "ouq/normal.hpp"
#include "ouq/serialize.hpp"

namespace ouq {

DeltaDistribution::DeltaDistribution(Kind kind, double eps) : kind_(kind), eps_(eps)
{
    if (!(eps > 0.0) || !std::isfinite(eps))
        throw std::invalid_argument("DeltaDistribution: eps must be positive, got " + std::to_string(eps));
}

DeltaDistribution DeltaDistribution::parse(const std::string& name, double eps)
{
    if (name == "uniform") return uniform(eps);
    if (name == "truncgauss") return trunc_gauss(eps);
    throw std::invalid_argument("unknown distribution '" + name + "' (expected uniform or truncgauss)");
}

double DeltaDistribution::scale() const
{
    return std::sqrt(eps_ * eps_ / 12.0);
}

std::string DeltaDistribution::name() const
{
    return kind_ == Kind::Uniform ? "uniform" : "truncgauss";
}

double DeltaDistribution::cdf(double x) const
{
    if (x <= lo()) return 0.0;
    if (x >= hi()) return 1.0;
    if (kind_ == Kind::Uniform) return (x - lo()) / (hi() - lo());
    const double a = normal_cdf((lo() - loc()) / scale());
    const double b = normal_cdf((hi() - loc()) / scale());
    return std::clamp((normal_cdf((x - loc()) / scale()) - a) / (b - a), 0.0, 1.0);
}

DeltaSampler::DeltaSampler(DeltaDistribution dist, std::uint64_t seed) : dist_(dist), rng_(seed)
{
    if (dist_.kind() == DeltaDistribution::Kind::TruncGauss) {
        double a = (dist_.lo() - dist_.loc()) / dist_.scale();
        double b = (dist_.hi() - dist_.loc()) / dist_.scale();
        // invert in the lower tail, where the CDF keeps its relative precision
        if (a > 0.0) {
            mirrored_ = true;
            std::swap(a, b);
            a = -a;
            b = -b;
        }
        cdf_lo_ = normal_cdf(a);
        cdf_hi_ = normal_cdf(b);
    }
}

double DeltaSampler::next()
{
    const double u = rng_.uniform();
    if (dist_.kind() == DeltaDistribution::Kind::Uniform) return dist_.lo() + (dist_.hi() - dist_.lo()) * u;

    double x = normal_quantile(cdf_lo_ + u * (cdf_hi_ - cdf_lo_));
    if (mirrored_) x = -x;
    return std::clamp(dist_.loc() + dist_.scale() * x, dist_.lo(), dist_.hi());
}

std::vector<double> draw(const DeltaDistribution& dist, std::size_t n, std::uint64_t seed)
{
    if (n == 0) throw std::invalid_argument("draw: n must be at least 1");
    DeltaSampler sampler(dist, seed);
    std::vector<double> out(n);
    for (double& x : out) x = sampler.next();
    return out;
}

void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn)
{
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto work = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = count;
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

namespace {

std::size_t scaled_count(double factor, std::size_t n)
{
    // tolerate 1.1 * 10000 = 11000.000000000002
    return static_cast<std::size_t>(std::ceil(factor * static_cast<double>(n) - 1e-9));
}

bool by_z(const SampleRecord& a, const SampleRecord& b)
{
    if (a.z != b.z) return a.z < b.z;
    if (a.delta != b.delta) return a.delta < b.delta;
    return a.fit < b.fit;
}

} // namespace

SampleSet mc_run(const McConfig& cfg)
{
    if (cfg.n == 0) throw std::invalid_argument("mc_run: n must be at least 1");
    burgers::Params{cfg.v, 0.0}.validate();
    if (!(cfg.accept_tol >= 0.0)) throw std::invalid_argument("mc_run: accept_tol must be non-negative");
    const DeltaDistribution dist = cfg.dist == DeltaDistribution::Kind::Uniform
                                       ? DeltaDistribution::uniform(cfg.eps)
                                       : DeltaDistribution::trunc_gauss(cfg.eps);

    DeltaSampler sampler(dist, cfg.seed);
    std::vector<double> deltas;
    std::vector<burgers::Solution> solutions;
    const auto extend = [&](std::size_t count) {
        const std::size_t start = deltas.size();
        for (std::size_t i = 0; i < count; ++i) deltas.push_back(sampler.next());
        solutions.resize(deltas.size());
        parallel_for(count, cfg.workers, [&](std::size_t i) {
            solutions[start + i] = burgers::solve_best({cfg.v, deltas[start + i]}, cfg.solve);
        });
    };

    const std::size_t cap = std::max(scaled_count(cfg.hard_cap, cfg.n), scaled_count(cfg.padding, cfg.n));
    const std::size_t chunk = std::max<std::size_t>(1, scaled_count(0.1, cfg.n));
    extend(scaled_count(cfg.padding, cfg.n));

    SampleSet out;
    out.v = cfg.v;
    out.eps = cfg.eps;
    out.n = cfg.n;
    out.dist = dist.name();
    out.seed = cfg.seed;
    out.accept_tol = cfg.accept_tol;
    out.records.reserve(cfg.n);

    std::size_t i = 0;
    while (out.records.size() < cfg.n) {
        if (i == deltas.size()) {
            if (deltas.size() >= cap) {
                throw BufferExhausted("mc_run: only " + std::to_string(out.records.size()) + " of " +
                                      std::to_string(cfg.n) + " solves accepted within " +
                                      std::to_string(cap) + " draws");
            }
            extend(std::min(chunk, cap - deltas.size()));
        }
        const auto& sol = solutions[i];
        if (sol.fit <= cfg.accept_tol) {
            out.records.push_back({sol.z_star, deltas[i], sol.fit});
        } else {
            ++out.miss_count;
            out.missed_deltas.push_back(deltas[i]);
        }
        ++i;
    }
    out.draws = i;
    std::sort(out.records.begin(), out.records.end(), by_z);
    return out;
}

CdfPoints cdf(std::span<const double> values, std::optional<double> lo, std::optional<double> hi)
{
    if (values.empty()) throw EmptyAfterFilter("cdf: no values");
    const auto [vmin, vmax] = std::minmax_element(values.begin(), values.end());
    const double low = lo.value_or(*vmin);
    const double high = hi.value_or(*vmax);

    CdfPoints out;
    for (double x : values) {
        if (x >= low && x <= high) out.xs.push_back(x);
    }
    if (out.xs.empty()) throw EmptyAfterFilter("cdf: no values inside [lo, hi]");
    std::sort(out.xs.begin(), out.xs.end());

    const double m = static_cast<double>(out.xs.size());
    for (std::size_t i = 0; i < out.xs.size(); ++i) out.ys.push_back(static_cast<double>(i + 1) / m);
    if (low < out.xs.front()) {
        out.xs.insert(out.xs.begin(), low);
        out.ys.insert(out.ys.begin(), 0.0);
    }
    if (high > out.xs.back()) {
        out.xs.push_back(high);
        out.ys.push_back(1.0);
    }
    return out;
}

Moments moments(std::span<const double> values)
{
    if (values.empty()) throw std::invalid_argument("moments: no values");
    const double n = static_cast<double>(values.size());
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    // rounding can push the sum outside [min, max] for near-constant data
    const double mu = std::clamp(std::accumulate(values.begin(), values.end(), 0.0) / n, *lo, *hi);
    double ss = 0.0;
    for (double x : values) ss += (x - mu) * (x - mu);
    return {mu, std::sqrt(ss / n)};
}

double ks_statistic(std::span<const double> values, const std::function<double(double)>& theoretical_cdf)
{
    if (values.empty()) throw std::invalid_argument("ks_statistic: no values");
    std::vector<double> x(values.begin(), values.end());
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = theoretical_cdf(x[i]);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    return d;
}

double ks_critical_1pct(std::size_t n)
{
    return 1.63 / std::sqrt(static_cast<double>(n));
}

std::vector<double> z_values(const SampleSet& s)
{
    std::vector<double> out;
    out.reserve(s.records.size());
    for (const auto& r : s.records) out.push_back(r.z);
    return out;
}

std::vector<double> delta_values(const SampleSet& s)
{
    std::vector<double> out;
    out.reserve(s.records.size());
    for (const auto& r : s.records) out.push_back(r.delta);
    return out;
}

double p_success(const SampleSet& samples, int dx_percent)
{
    if (dx_percent < 0 || dx_percent > 15)
        throw std::invalid_argument("p_success: dx must lie in [0, 15], got " + std::to_string(dx_percent));
    if (samples.records.empty()) throw std::invalid_argument("p_success: empty sample set");
    const auto z = z_values(samples);
    const double threshold = (100.0 + dx_percent) / 100.0 * moments(z).mean;
    const auto hits = std::count_if(z.begin(), z.end(), [threshold](double x) { return x > threshold; });
    return static_cast<double>(hits) / static_cast<double>(z.size());
}

std::vector<std::size_t> choose_without_replacement(std::size_t n, std::size_t m, std::uint64_t seed)
{
    if (m > n) throw std::invalid_argument("choose_without_replacement: m exceeds n");
    std::vector<std::size_t> index(n);
    std::iota(index.begin(), index.end(), std::size_t{0});
    Rng rng(seed);
    // partial Fisher-Yates
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(index[i], index[j]);
    }
    index.resize(m);
    return index;
}

SampleSet subsample(const SampleSet& s, std::size_t m, std::uint64_t seed)
{
    SampleSet out = s;
    out.records.clear();
    for (std::size_t i : choose_without_replacement(s.records.size(), m, seed)) out.records.push_back(s.records[i]);
    std::sort(out.records.begin(), out.records.end(), by_z);
    out.n = m;
    return out;
}

std::vector<BoundEstimate> mc_bound_estimate(const McConfig& base, std::size_t repeats,
                                             std::span<const int> dx_list)
{
    if (repeats == 0) throw std::invalid_argument("mc_bound_estimate: repeats must be at least 1");
    std::vector<BoundEstimate> out;
    for (int dx : dx_list) out.push_back({dx, 0.0, 0.0, 0.0, {}});

    for (std::size_t r = 0; r < repeats; ++r) {
        McConfig cfg = base;
        cfg.seed = derive_seed(base.seed, r);
        const SampleSet s = mc_run(cfg);
        for (auto& e : out) e.runs.push_back(p_success(s, e.dx));
    }
    for (auto& e : out) {
        const auto [lo, hi] = std::minmax_element(e.runs.begin(), e.runs.end());
        e.min = *lo;
        e.max = *hi;
        e.mean = std::accumulate(e.runs.begin(), e.runs.end(), 0.0) / static_cast<double>(e.runs.size());
    }
    return out;
}

void write_samples(const SampleSet& s, const std::string& csv_path, const std::string& comment)
{
    {
        std::ofstream out(csv_path);
        if (!out) throw std::runtime_error("cannot open " + csv_path + " for writing");
        if (!comment.empty()) out << "# " << comment << '\n';
        out << "z,delta,fit\n";
        for (const auto& r : s.records)
            out << format_real(r.z) << ',' << format_real(r.delta) << ',' << format_real(r.fit) << '\n';
        if (!out) throw std::runtime_error("failed writing " + csv_path);
    }

    const Moments mz = moments(z_values(s));
    const Moments md = moments(delta_values(s));
    nlohmann::json meta = {{"v", s.v},
                           {"eps", s.eps},
                           {"n", s.n},
                           {"N", s.records.size()},
                           {"dist", s.dist},
                           {"seed", s.seed},
                           {"miss_count", s.miss_count},
                           {"missed_deltas", s.missed_deltas},
                           {"accept_tol", s.accept_tol},
                           {"draws", s.draws},
                           {"z_mean", mz.mean},
                           {"z_std", mz.std},
                           {"d_mean", md.mean},
                           {"d_std", md.std}};
    write_json_file(meta, csv_path + ".json");
}

SampleSet read_samples(const std::string& csv_path)
{
    std::ifstream in(csv_path);
    if (!in) throw std::runtime_error("cannot open " + csv_path);

    SampleSet s;
    std::string line;
    bool header = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            if (line != "z,delta,fit") throw std::runtime_error(csv_path + ": expected header 'z,delta,fit'");
            header = true;
            continue;
        }
        SampleRecord r{};
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &r.z, &r.delta, &r.fit) != 3)
            throw std::runtime_error(csv_path + ":" + std::to_string(lineno) + ": malformed record");
        s.records.push_back(r);
    }
    if (!header) throw std::runtime_error(csv_path + ": missing header");
    s.n = s.records.size();

    const std::string sidecar = csv_path + ".json";
    if (std::filesystem::exists(sidecar)) {
        const auto meta = read_json_file(sidecar);
        s.v = meta.value("v", 0.0);
        s.eps = meta.value("eps", 0.0);
        s.dist = meta.value("dist", std::string{});
        s.seed = meta.value("seed", std::uint64_t{0});
        s.miss_count = meta.value("miss_count", std::size_t{0});
        s.missed_deltas = meta.value("missed_deltas", std::vector<double>{});
        s.accept_tol = meta.value("accept_tol", 0.0);
        s.draws = meta.value("draws", std::size_t{0});
    }
    return s;
}

} // namespace ouq
