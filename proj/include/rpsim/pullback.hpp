#pragma once

// Trajectories started at pull-back times -k tau, coalescence of distinct initial
// conditions under shared noise, and the theta-shift periodicity checks.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "rpsim/model.hpp"
#include "rpsim/noise.hpp"
#include "rpsim/stepper.hpp"

namespace rpsim {

enum class Scheme { kBem, kEm };

std::string_view to_string(Scheme scheme) noexcept;
/// "bem" or "em"; throws ConfigError otherwise.
Scheme parse_scheme(std::string_view text);

/// |x| above which an explicit run is declared divergent and truncated.
inline constexpr double kDivergenceThreshold = 1e12;

struct SolverSummary {
    int max_newton_iters = 0;
    double max_residual = 0.0;
    bool any_fallback = false;

    void absorb(const StepStats& stats) noexcept;
};

struct PathResult {
    GridSpec grid;               // states[j] sits at grid.time(j)
    std::vector<Vector> states;  // grid.count + 1 entries unless truncated by divergence
    Scheme scheme = Scheme::kBem;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> pullback_periods;
    SolverSummary solver;
    bool diverged = false;
    std::optional<std::int64_t> divergence_step;

    [[nodiscard]] double time(std::int64_t j) const noexcept { return grid.time(j); }
    /// Node index of absolute time t; throws AlignmentError if t is not a node of this path.
    [[nodiscard]] std::int64_t index_of(double t) const;
    [[nodiscard]] const Vector& at(double t) const { return states.at(static_cast<std::size_t>(index_of(t))); }
};

/// Iterates the chosen scheme over `grid`, reading increments by absolute index.
/// BEM solver failures are rethrown with the failing step index attached; EM blow-up sets
/// `diverged` and truncates the path.
PathResult simulate(const ModelSpec& model, const GridSpec& grid, Scheme scheme, const Vector& x0,
                    const IncrementSource& noise, const SolverConfig& config);

/// Nodes of `path` with times in [t_start, t_end].
PathResult restrict_to(const PathResult& path, double t_start, double t_end);

struct CoalescenceReport {
    double step = 0.0;
    std::vector<double> distances;  // |D_N|, N = 0..count
    std::vector<double> envelope;   // (1 + 2h(lambda_1 - C_f))^{-N/2} |D_0|; empty without C_f
    PathResult path_a;
    PathResult path_b;

    /// First N with |D_N| < eps.
    [[nodiscard]] std::optional<std::int64_t> first_below(double eps) const;
};

/// Two BEM runs from different initial conditions on the same noise.
CoalescenceReport coalescence(const ModelSpec& model, const GridSpec& grid, const Vector& init_a,
                              const Vector& init_b, const IncrementSource& noise, const SolverConfig& config);

/// Smallest k for which the contraction envelope over k periods drops below `target`.
/// Requires a declared C_f.
std::int64_t default_pullback_periods(const ModelSpec& model, double h, double target = 1e-8);

struct PullbackRequest {
    double h = 0.05;
    std::int64_t periods = 10;  // start at -periods * tau
    double horizon_start = -1.0;
    double horizon_end = 0.0;
    Scheme scheme = Scheme::kBem;
};

/// X^{-k tau} restricted to the horizon: the finite pull-back approximant of the random
/// periodic path.
PathResult random_periodic_path(const ModelSpec& model, const NoiseLattice& lattice, const PullbackRequest& request,
                                const Vector& x0, const SolverConfig& config);

struct ShiftPeriodicityReport {
    /// max_j |X^{-k tau}(theta_{p tau} w)_j - X^{-(k-p) tau}(w)_j| over the whole run; the
    /// two recursions consume identical increments so this is exactly zero.
    double identity_discrepancy = 0.0;
    /// max |X^{-k tau}_s(w) - X^{-k tau}_{s + p tau}(theta_{-p tau} w)| for s in the segment.
    double segment_discrepancy = 0.0;
    double tolerance = 0.0;  // 10 * residual_tol
    PathResult segment;          // w on [segment_start, segment_end]
    PathResult shifted_segment;  // theta_{-p tau} w on the segment displaced by p tau

    [[nodiscard]] bool passed() const noexcept {
        return identity_discrepancy <= tolerance && segment_discrepancy <= tolerance;
    }
};

struct ShiftPeriodicityRequest {
    double h = 0.05;
    std::int64_t periods = 30;
    std::int64_t shift_periods = 1;
    double segment_start = -4.0;
    double segment_end = -1.0;
};

ShiftPeriodicityReport verify_shift_periodicity(const ModelSpec& model, const NoiseLattice& lattice,
                                                const ShiftPeriodicityRequest& request, const Vector& x0,
                                                const SolverConfig& config);

/// r -> X^0_r(theta_{-r} w) for r = h, 2h, ..., r_max: each value comes from its own run
/// over [0, r] on the lattice shifted by -r. states[0] holds x0 (r = 0).
PathResult pullback_pinned_path(const ModelSpec& model, const NoiseLattice& lattice, double h, double r_max,
                                const Vector& x0, const SolverConfig& config, Scheme scheme = Scheme::kBem);

/// Trajectory CSV: '#key=value' metadata lines, then "t,x_1..x_d" and one row per node.
void write_trajectory_csv(std::ostream& out, const PathResult& path);

}  // namespace rpsim
