#pragma once

// Monte Carlo pipeline for the perturbed Burgers' problem: draw boundary
// perturbations, solve for the transition layer of each, keep the solves
// that meet the residual tolerance, and summarize the resulting sample.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ouq/burgers.hpp"
#include "ouq/rng.hpp"

namespace ouq {

/// Law of the boundary perturbation on [0, eps]: uniform, or a normal with the
/// uniform's mean (eps / 2) and standard deviation (eps / sqrt(12)) truncated
/// to the same interval.
class DeltaDistribution {
public:
    enum class Kind { Uniform, TruncGauss };

    static DeltaDistribution uniform(double eps) { return {Kind::Uniform, eps}; }
    static DeltaDistribution trunc_gauss(double eps) { return {Kind::TruncGauss, eps}; }
    /// Accepts "uniform" or "truncgauss". Throws std::invalid_argument.
    static DeltaDistribution parse(const std::string& name, double eps);

    Kind kind() const { return kind_; }
    double eps() const { return eps_; }
    double lo() const { return 0.0; }
    double hi() const { return eps_; }
    double loc() const { return 0.5 * eps_; }
    double scale() const;
    std::string name() const;

    /// Theoretical CDF.
    double cdf(double x) const;

private:
    DeltaDistribution(Kind kind, double eps);
    Kind kind_;
    double eps_;
};

/// Stream of perturbations from one seed; each value consumes one 64-bit draw
/// and is produced by inverting the CDF.
class DeltaSampler {
public:
    DeltaSampler(DeltaDistribution dist, std::uint64_t seed);
    double next();

private:
    DeltaDistribution dist_;
    Rng rng_;
    double cdf_lo_ = 0.0; // truncation limits of the (possibly mirrored) standard normal
    double cdf_hi_ = 1.0;
    bool mirrored_ = false;
};

/// First n values of DeltaSampler(dist, seed).
std::vector<double> draw(const DeltaDistribution& dist, std::size_t n, std::uint64_t seed);

struct SampleRecord {
    double z;
    double delta;
    double fit;
    bool operator==(const SampleRecord&) const = default;
};

struct SampleSet {
    std::vector<SampleRecord> records; ///< ascending in z
    double v = 0.0;
    double eps = 0.0;
    std::size_t n = 0;
    std::string dist;
    std::uint64_t seed = 0;
    std::size_t miss_count = 0;
    std::vector<double> missed_deltas;
    double accept_tol = 0.0;
    /// Perturbations consumed to collect the n accepted records.
    std::size_t draws = 0;
};

struct McConfig {
    double v = 0.1;
    double eps = 0.1;
    std::size_t n = 10000;
    DeltaDistribution::Kind dist = DeltaDistribution::Kind::Uniform;
    double accept_tol = 1e-9;
    std::uint64_t seed = 0;
    /// Worker threads for the per-sample solves; 0 means hardware concurrency.
    std::size_t workers = 0;
    /// Initial draw count is ceil(padding * n).
    double padding = 1.1;
    /// Redraws stop once this many times n perturbations were drawn.
    double hard_cap = 2.0;
    burgers::SolveConfig solve;
};

/// Draws ceil(padding * n) perturbations, solves each (in parallel), and
/// accepts in draw order until n records have fit <= accept_tol. When the
/// buffer runs short, redraws in chunks of ceil(0.1 * n) from the same
/// stream; throws BufferExhausted past the hard cap. The result does not
/// depend on the worker count.
SampleSet mc_run(const McConfig& cfg);

/// Runs fn(i) for i in [0, count) on up to `workers` threads (0 = hardware
/// concurrency). Exceptions from fn are rethrown on the calling thread.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn);

struct CdfPoints {
    std::vector<double> xs;
    std::vector<double> ys;
};

/// Empirical CDF step points of the values inside [lo, hi] (defaults: the
/// sample min and max). Adds (lo, 0) when lo is below the smallest kept value
/// and (hi, 1) when hi is above the largest. Throws EmptyAfterFilter.
CdfPoints cdf(std::span<const double> values, std::optional<double> lo = std::nullopt,
              std::optional<double> hi = std::nullopt);

struct Moments {
    double mean;
    double std; ///< population convention (divide by n)
};

Moments moments(std::span<const double> values);

/// Kolmogorov-Smirnov distance between the sample and a theoretical CDF.
double ks_statistic(std::span<const double> values, const std::function<double(double)>& theoretical_cdf);

/// Critical KS distance at the 1% level, 1.63 / sqrt(n).
double ks_critical_1pct(std::size_t n);

std::vector<double> z_values(const SampleSet& s);
std::vector<double> delta_values(const SampleSet& s);

/// Fraction of records with z > (100 + dx_percent) / 100 * mean(z).
/// dx_percent must lie in [0, 15].
double p_success(const SampleSet& samples, int dx_percent);

/// m distinct indices into [0, n), chosen uniformly without replacement.
std::vector<std::size_t> choose_without_replacement(std::size_t n, std::size_t m, std::uint64_t seed);

/// Records at m distinct random positions, re-sorted by z.
SampleSet subsample(const SampleSet& s, std::size_t m, std::uint64_t seed);

struct BoundEstimate {
    int dx = 0;
    double min = 0.0;
    double mean = 0.0;
    double max = 0.0;
    std::vector<double> runs; ///< P(success) of each repeat
};

/// Repeats mc_run `repeats` times with seeds derive_seed(base.seed, r) and
/// summarizes p_success at each dx.
std::vector<BoundEstimate> mc_bound_estimate(const McConfig& base, std::size_t repeats,
                                             std::span<const int> dx_list);

/// CSV "z,delta,fit" (optionally preceded by one '#' comment line), plus a
/// JSON sidecar at csv_path + ".json" carrying run metadata and moments.
void write_samples(const SampleSet& s, const std::string& csv_path, const std::string& comment = {});

/// Reads records from the CSV and metadata from the sidecar when present.
SampleSet read_samples(const std::string& csv_path);

} // namespace ouq
