#pragma once

// Monte Carlo verification: strong error against a shared-noise reference, order fits,
// second-moment bounds, and empirical periodic measures compared in a weak distance.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "rpsim/model.hpp"
#include "rpsim/noise.hpp"
#include "rpsim/pullback.hpp"
#include "rpsim/stepper.hpp"

namespace rpsim {

/// Neumaier-compensated sum.
double compensated_sum(std::span<const double> values) noexcept;

struct SampleStats {
    double mean = 0.0;
    double variance = 0.0;        // unbiased
    double standard_error = 0.0;  // sqrt(variance / n)
};

SampleStats sample_stats(std::span<const double> values);

struct ErrorRow {
    double h = 0.0;
    double rms_error = 0.0;       // at t_eval
    double standard_error = 0.0;  // of rms_error, delta method from the squared errors
    std::int64_t num_paths = 0;
    bool diverged = false;
    double sup_rms_error = 0.0;   // max over the final period of the pointwise rms error
};

struct ErrorTable {
    Scheme scheme = Scheme::kBem;
    std::vector<ErrorRow> rows;
    double fitted_order = 0.0;  // NaN when fewer than three usable rows
    double fit_intercept = 0.0;
    double order_standard_error = 0.0;
};

struct OrderFit {
    double order = 0.0;      // slope of log2(error) against log2(h)
    double intercept = 0.0;  // log2(error) at h = 1
    double order_standard_error = 0.0;  // of the slope, from the residual variance
    std::vector<double> residuals;
};

/// Least squares on (log2 h, log2 rms) over non-diverged rows with positive error.
/// Throws InsufficientData with fewer than three such rows.
OrderFit fit_order(const ErrorTable& table);

struct StrongErrorRequest {
    double h_ref = 0x1.0p-12;
    std::vector<double> h_list;
    std::int64_t periods = 10;  // pull-back from -periods * tau
    std::int64_t num_paths = 1000;
    double t_eval = 0.0;
    std::vector<Scheme> schemes{Scheme::kBem, Scheme::kEm};
    std::uint64_t seed = 1;
    int workers = 1;
    /// Materialise each path's fine increments once instead of regenerating them per level.
    bool precompute_increments = true;
};

/// One table per requested scheme. Every path m uses lattice seed derive_seed(seed, m);
/// the BEM reference at h_ref and every coarse run read the same fine increments.
std::vector<ErrorTable> strong_error(const ModelSpec& model, const StrongErrorRequest& request,
                                     const InitialCondition& init, const SolverConfig& config);

struct MomentEstimate {
    double sup_mean_square = 0.0;  // max over nodes of the sample mean of |X|^2
    double standard_error = 0.0;   // at the maximising node
    std::int64_t argmax_index = 0;
    double argmax_time = 0.0;
    std::optional<double> alpha;
    std::optional<double> bound;  // E|xi|^2 + alpha

    /// sup_mean_square <= bound + se_multiplier * standard_error.
    [[nodiscard]] bool within_bound(double se_multiplier = 3.0) const;
};

MomentEstimate moment_estimate(const ModelSpec& model, const GridSpec& grid, Scheme scheme,
                               const InitialCondition& init, std::int64_t num_paths, std::uint64_t seed,
                               const SolverConfig& config, int workers = 1);

struct EmpiricalMeasure {
    double t = 0.0;
    double h = 0.0;
    std::vector<Vector> samples;

    /// Throws ConfigError with fewer than two samples or any non-finite sample.
    void validate() const;
    /// Coordinate 0 of every sample.
    [[nodiscard]] std::vector<double> values() const;
};

struct MeasureRequest {
    double h = 0.05;
    double base_step = 0.0;  // lattice resolution; 0 means h
    std::int64_t periods = 10;
    std::vector<double> times;
    std::int64_t num_paths = 1000;
    std::uint64_t seed = 1;
    int workers = 1;
};

/// Empirical law of X^{-k tau}_t over independent lattices, one measure per requested t.
std::vector<EmpiricalMeasure> periodic_measure(const ModelSpec& model, const MeasureRequest& request,
                                               const InitialCondition& init, const SolverConfig& config);

/// Order-statistics 1-Wasserstein distance, each |x_(i) - y_(i)| clamped at 2; an upper
/// bound for the supremum over 1-Lipschitz test functions bounded by 1.
/// d = 1 and equal sample sizes only (ConfigError otherwise).
double weak_distance(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

struct NoiseFloor {
    double mean = 0.0;
    double quantile95 = 0.0;
};

/// Distances between pairs of resamples drawn with replacement from the pooled samples,
/// i.e. what weak_distance reports when both sides share one law.
NoiseFloor bootstrap_noise_floor(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, int replicates,
                                 std::uint64_t seed);

struct MeasureConvergenceRow {
    double h = 0.0;
    double h_fine = 0.0;
    double distance = 0.0;
    double noise_floor = 0.0;
    double ratio_to_previous = 0.0;  // NaN on the first row
};

struct MeasureConvergenceTable {
    double t = 0.0;
    std::vector<MeasureConvergenceRow> rows;
    std::vector<EmpiricalMeasure> measures;  // one per level, coarsest first
    static constexpr double kPredictedRatio = 0.70710678118654752;  // 2^{-1/2}
};

struct MeasureConvergenceRequest {
    std::vector<double> h_levels;  // coarsest first, each the previous halved
    std::int64_t num_paths = 1000;
    double t = 0.0;
    std::int64_t periods = 10;
    std::uint64_t seed = 1;
    int workers = 1;
    int bootstrap_replicates = 200;
};

/// Weak distance between the empirical measures at consecutive levels, all levels driven by
/// the same fine lattice (resolution = finest level) per path.
MeasureConvergenceTable measure_convergence_study(const ModelSpec& model, const MeasureConvergenceRequest& request,
                                                  const InitialCondition& init, const SolverConfig& config);

/// "h,rms_error,standard_error,num_paths,diverged"
void write_error_table_csv(std::ostream& out, const ErrorTable& table);
/// "log2_h,log2_error" for the non-diverged rows.
void write_order_csv(std::ostream& out, const ErrorTable& table);
/// "t,sample_index,value" (value_1..value_d when d > 1).
void write_measure_csv(std::ostream& out, std::span<const EmpiricalMeasure> measures);

}  // namespace rpsim
