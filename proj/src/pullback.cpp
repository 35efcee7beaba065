#include "rpsim/pullback.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "rpsim/csv.hpp"
#include "rpsim/errors.hpp"

namespace rpsim {

std::string_view to_string(Scheme scheme) noexcept { return scheme == Scheme::kBem ? "bem" : "em"; }

Scheme parse_scheme(std::string_view text) {
    if (text == "bem") return Scheme::kBem;
    if (text == "em") return Scheme::kEm;
    throw ConfigError("scheme must be 'bem' or 'em', got '" + std::string(text) + "'");
}

void SolverSummary::absorb(const StepStats& stats) noexcept {
    max_newton_iters = std::max(max_newton_iters, stats.newton_iters);
    max_residual = std::max(max_residual, stats.final_residual);
    any_fallback = any_fallback || stats.fallback_used;
}

std::int64_t PathResult::index_of(double t) const {
    const double pos = t / grid.step() - static_cast<double>(grid.start_index);
    const double nearest = std::round(pos);
    if (std::abs(pos - nearest) > 1e-9 * std::max(1.0, std::abs(pos)) || nearest < 0.0 ||
        nearest >= static_cast<double>(states.size())) {
        std::ostringstream os;
        os << "time " << t << " is not a node of this path";
        throw AlignmentError(os.str());
    }
    return static_cast<std::int64_t>(nearest);
}

PathResult simulate(const ModelSpec& model, const GridSpec& grid, Scheme scheme, const Vector& x0,
                    const IncrementSource& noise, const SolverConfig& config) {
    grid.validate();
    if (x0.size() != model.dimension() || noise.dimension() != model.dimension())
        throw ConfigError("simulate: dimension mismatch between model, initial condition and noise");
    if (grid.base_step != noise.base_step()) throw AlignmentError("simulate: grid is not aligned to the noise lattice");

    PathResult out;
    out.grid = grid;
    out.scheme = scheme;
    out.seed = noise.seed();
    out.states.reserve(static_cast<std::size_t>(grid.count + 1));
    out.states.push_back(x0);

    const double h = grid.step();
    Vector x = x0;
    for (std::int64_t j = 0; j < grid.count; ++j) {
        const Vector dw = noise.coarse_increment(grid, grid.start_index + j);
        if (scheme == Scheme::kBem) {
            const StepTimes times{config.drift_node == DriftNode::kNext ? grid.phase(j + 1) : grid.phase(j),
                                  grid.phase(j)};
            try {
                StepResult r = bem_step(model, times, h, x, dw, config);
                out.solver.absorb(r.stats);
                x = std::move(r.value);
            } catch (NumericalError& e) {
                e.set_step_index(j);
                throw;
            }
        } else {
            x = em_step(model, grid.phase(j), h, x, dw);
        }
        out.states.push_back(x);
        if (!x.allFinite() || x.norm() > kDivergenceThreshold) {
            out.diverged = true;
            out.divergence_step = j + 1;
            out.grid.count = j + 1;
            break;
        }
    }
    return out;
}

PathResult restrict_to(const PathResult& path, double t_start, double t_end) {
    const std::int64_t first = path.index_of(t_start);
    const std::int64_t last = path.index_of(t_end);
    if (last < first) throw ConfigError("restrict: empty time window");
    PathResult out = path;
    out.grid.start_index = path.grid.start_index + first;
    out.grid.count = last - first;
    out.states.assign(path.states.begin() + first, path.states.begin() + last + 1);
    return out;
}

std::optional<std::int64_t> CoalescenceReport::first_below(double eps) const {
    for (std::size_t n = 0; n < distances.size(); ++n)
        if (distances[n] < eps) return static_cast<std::int64_t>(n);
    return std::nullopt;
}

CoalescenceReport coalescence(const ModelSpec& model, const GridSpec& grid, const Vector& init_a,
                              const Vector& init_b, const IncrementSource& noise, const SolverConfig& config) {
    CoalescenceReport rep;
    rep.step = grid.step();
    rep.path_a = simulate(model, grid, Scheme::kBem, init_a, noise, config);
    rep.path_b = simulate(model, grid, Scheme::kBem, init_b, noise, config);
    const std::size_t n = rep.path_a.states.size();
    rep.distances.reserve(n);
    for (std::size_t j = 0; j < n; ++j) rep.distances.push_back((rep.path_a.states[j] - rep.path_b.states[j]).norm());
    if (const auto c = model.monotonicity_constant(grid.step() * 2.0)) {
        // 1 + 2h(lambda_1 - C_f), i.e. the monotonicity constant at step 2h.
        const double factor = *c;
        rep.envelope.reserve(n);
        for (std::size_t j = 0; j < n; ++j)
            rep.envelope.push_back(std::pow(factor, -0.5 * static_cast<double>(j)) * rep.distances[0]);
    }
    return rep;
}

std::int64_t default_pullback_periods(const ModelSpec& model, double h, double target) {
    const auto c = model.monotonicity_constant(2.0 * h);
    if (!c) throw ConfigError("pull-back depth: C_f must be declared to size the pull-back");
    if (!(target > 0.0 && target < 1.0)) throw ConfigError("pull-back depth: target must lie in (0, 1)");
    const double n = std::round(model.period / h);
    const double per_period = 0.5 * n * std::log(*c);
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(-std::log(target) / per_period)));
}

PathResult random_periodic_path(const ModelSpec& model, const NoiseLattice& lattice, const PullbackRequest& request,
                                const Vector& x0, const SolverConfig& config) {
    if (request.periods < 1) throw ConfigError("pull-back: periods must be >= 1");
    const double t0 = -static_cast<double>(request.periods) * model.period;
    if (request.horizon_start < t0) throw ConfigError("pull-back: horizon starts before -k tau");
    const GridSpec grid = make_grid(lattice.base_step(), request.h, model.period, t0, request.horizon_end);
    PathResult full = simulate(model, grid, request.scheme, x0, lattice, config);
    full.pullback_periods = request.periods;
    if (full.diverged) return full;
    return restrict_to(full, request.horizon_start, request.horizon_end);
}

ShiftPeriodicityReport verify_shift_periodicity(const ModelSpec& model, const NoiseLattice& lattice,
                                                const ShiftPeriodicityRequest& req, const Vector& x0,
                                                const SolverConfig& config) {
    if (req.shift_periods < 1 || req.periods <= req.shift_periods)
        throw ConfigError("shift periodicity: need periods > shift_periods >= 1");
    const double tau = model.period;
    const double shift = static_cast<double>(req.shift_periods) * tau;
    const double t0 = -static_cast<double>(req.periods) * tau;
    if (req.segment_start < t0 || req.segment_end <= req.segment_start)
        throw ConfigError("shift periodicity: segment must lie after -k tau");

    ShiftPeriodicityReport rep;
    rep.tolerance = 10.0 * config.residual_tol;

    // X^{-k tau}(theta_{p tau} w) against X^{-(k-p) tau}(w), node by node.
    {
        const GridSpec ga = make_grid(lattice.base_step(), req.h, tau, t0, req.segment_end);
        const GridSpec gb = make_grid(lattice.base_step(), req.h, tau, t0 + shift, req.segment_end + shift);
        const NoiseLattice forward = lattice.shifted(ga, req.shift_periods * ga.period_steps);
        const PathResult a = simulate(model, ga, Scheme::kBem, x0, forward, config);
        const PathResult b = simulate(model, gb, Scheme::kBem, x0, lattice, config);
        for (std::size_t j = 0; j < a.states.size(); ++j)
            rep.identity_discrepancy = std::max(rep.identity_discrepancy, (a.states[j] - b.states[j]).norm());
    }

    // Segment comparison: w on [s0, s1] against theta_{-p tau} w on [s0 + p tau, s1 + p tau].
    {
        const GridSpec ga = make_grid(lattice.base_step(), req.h, tau, t0, req.segment_end);
        const GridSpec gb = make_grid(lattice.base_step(), req.h, tau, t0, req.segment_end + shift);
        const NoiseLattice backward = lattice.shifted(ga, -req.shift_periods * ga.period_steps);
        PathResult a = simulate(model, ga, Scheme::kBem, x0, lattice, config);
        PathResult b = simulate(model, gb, Scheme::kBem, x0, backward, config);
        a.pullback_periods = b.pullback_periods = req.periods;
        rep.segment = restrict_to(a, req.segment_start, req.segment_end);
        rep.shifted_segment = restrict_to(b, req.segment_start + shift, req.segment_end + shift);
        for (std::size_t j = 0; j < rep.segment.states.size(); ++j)
            rep.segment_discrepancy =
                std::max(rep.segment_discrepancy, (rep.segment.states[j] - rep.shifted_segment.states[j]).norm());
    }
    return rep;
}

PathResult pullback_pinned_path(const ModelSpec& model, const NoiseLattice& lattice, double h, double r_max,
                                const Vector& x0, const SolverConfig& config, Scheme scheme) {
    const GridSpec out_grid = make_grid(lattice.base_step(), h, model.period, 0.0, r_max);
    PathResult out;
    out.grid = out_grid;
    out.scheme = scheme;
    out.seed = lattice.seed();
    out.states.reserve(static_cast<std::size_t>(out_grid.count + 1));
    out.states.push_back(x0);
    for (std::int64_t i = 1; i <= out_grid.count; ++i) {
        GridSpec g = out_grid;
        g.count = i;
        const NoiseLattice view = lattice.shifted(out_grid, -i);
        PathResult run = simulate(model, g, scheme, x0, view, config);
        out.solver.max_newton_iters = std::max(out.solver.max_newton_iters, run.solver.max_newton_iters);
        out.solver.max_residual = std::max(out.solver.max_residual, run.solver.max_residual);
        out.solver.any_fallback = out.solver.any_fallback || run.solver.any_fallback;
        out.states.push_back(run.states.back());
        if (run.diverged) {
            out.diverged = true;
            out.divergence_step = i;
            out.grid.count = i;
            break;
        }
    }
    return out;
}

void write_trajectory_csv(std::ostream& out, const PathResult& path) {
    out << "#scheme=" << to_string(path.scheme) << '\n';
    out << "#seed=" << (path.seed ? std::to_string(*path.seed) : std::string("none")) << '\n';
    out << "#h=" << format_number(path.grid.step()) << '\n';
    out << "#k=" << (path.pullback_periods ? std::to_string(*path.pullback_periods) : std::string("none")) << '\n';
    if (path.diverged) out << "#diverged_at_step=" << *path.divergence_step << '\n';
    const Eigen::Index d = path.states.empty() ? 0 : path.states.front().size();
    out << 't';
    for (Eigen::Index c = 0; c < d; ++c) out << ",x_" << (c + 1);
    out << '\n';
    for (std::size_t j = 0; j < path.states.size(); ++j) {
        out << format_number(path.time(static_cast<std::int64_t>(j)));
        for (Eigen::Index c = 0; c < d; ++c) out << ',' << format_number(path.states[j][c]);
        out << '\n';
    }
}

}  // namespace rpsim
