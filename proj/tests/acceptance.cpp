// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "rpsim/analysis.hpp"
#include "rpsim/errors.hpp"
#include "rpsim/model.hpp"
#include "rpsim/noise.hpp"
#include "rpsim/parallel.hpp"
#include "rpsim/pullback.hpp"
#include "rpsim/stepper.hpp"

using namespace rpsim;

namespace {

constexpr double kPi = std::numbers::pi;

// Pinned tolerances and budgets.
constexpr int kSolverDraws = 10000;
constexpr double kContractionRelSlack = 1e-12;
// Distances within this many ulps of the state magnitude are at the rounding floor.
constexpr double kRoundoffUlps = 4.0;
constexpr double kCoalescenceEps = 1e-6;
constexpr double kCoalescenceTime = 2.0;
constexpr double kShiftToleranceFactor = 10.0;
constexpr double kDeterministicFactor = 5.0;
constexpr double kOrderLow = 0.5;
constexpr double kOrderHigh = 1.6;
constexpr double kReferenceBemError = 0.011;
constexpr double kReferenceEmError = 0.048;
constexpr double kErrorFactor = 3.0;
constexpr double kMomentSeMultiplier = 3.0;
constexpr double kFloorMultiplier = 3.0;

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<Outcome()> body;
};

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

Vector scalar(double v) { return Vector::Constant(1, v); }

double analytic_periodic(double t) {
    const double a = 10.0 * kPi, w = 2.0 * kPi;
    return (a * std::sin(w * t) - w * std::cos(w * t)) / (a * a + w * w);
}

// Random member of the monotone polynomial family, optionally with skew coupling. With c3 < 0
// the exact one-sided constant is C_f = c1 + c2^2 / (3|c3|); the skew part adds nothing.
ModelSpec random_monotone_model(std::int64_t draw) {
    std::uint32_t coord = 0;
    auto u = [&]() { return counter_uniform(31337, draw, coord++, Stream::kAssumptionSampling); };
    const int d = 1 + static_cast<int>(u() * 3.0);
    const double c0 = 2.0 * u() - 1.0;
    const double c1 = 4.0 * u() - 2.0;
    const double c2 = 2.0 * u() - 1.0;
    const double c3 = -(0.1 + 2.9 * u());
    const double forcing = 2.0 * u() - 1.0;
    const double c_f = c1 + c2 * c2 / (3.0 * std::abs(c3));

    std::vector<double> lambdas(static_cast<std::size_t>(d));
    for (auto& l : lambdas) l = 0.5 + 49.5 * u();
    std::sort(lambdas.begin(), lambdas.end());
    if (lambdas.front() <= c_f) {
        const double lift = c_f - lambdas.front() + 0.1 + u();
        for (auto& l : lambdas) l += lift;
    }

    Matrix skew = Matrix::Zero(d, d);
    if (u() < 0.5)
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j) {
                skew(i, j) = 4.0 * u() - 2.0;
                skew(j, i) = -skew(i, j);
            }

    ModelSpec m;
    m.name = "monotone-draw";
    m.eigenvalues = Eigen::Map<const Vector>(lambdas.data(), d);
    m.drift = [=](double t, const Vector& x) {
        Vector f = (c0 + x.array() * (c1 + x.array() * (c2 + x.array() * c3))).matrix();
        f.array() += forcing * std::sin(2.0 * kPi * t);
        return Vector(f + skew * x);
    };
    m.drift_jacobian = [=](double, const Vector& x) {
        Matrix j = skew;
        j.diagonal() += (c1 + x.array() * (2.0 * c2 + 3.0 * c3 * x.array())).matrix();
        return j;
    };
    m.diffusion = [](double) { return 0.0; };
    m.period = 1.0;
    m.constants.one_sided_lipschitz = c_f;
    return m;
}

Outcome criterion_solver() {
    const SolverConfig cfg;
    int failures = 0, contraction_violations = 0;
    double worst_residual_ratio = 0.0, worst_contraction_ratio = 0.0;
    int max_iters = 0, fallbacks = 0;
    for (std::int64_t k = 0; k < kSolverDraws; ++k) {
        const ModelSpec m = random_monotone_model(k);
        m.validate();
        const int d = m.dimension();
        std::uint32_t coord = 100;
        auto u = [&]() { return counter_uniform(4242, k, coord++, Stream::kAssumptionSampling); };
        auto n = [&]() { return counter_normal(4242, k, coord++, Stream::kAssumptionSampling); };
        const double t = u();
        const double h = 1e-3 + (0.999 - 1e-3) * u();
        Vector y1(d), y2(d);
        for (int i = 0; i < d; ++i) y1[i] = 3.0 * n();
        for (int i = 0; i < d; ++i) y2[i] = 3.0 * n();
        try {
            const StepResult a = implicit_solve(m, t, h, y1, cfg);
            const StepResult b = implicit_solve(m, t, h, y2, cfg);
            max_iters = std::max({max_iters, a.stats.newton_iters, b.stats.newton_iters});
            fallbacks += a.stats.fallback_used + b.stats.fallback_used;
            // Independent residual evaluation.
            auto residual = [&](const Vector& z, const Vector& y) {
                return (z + h * m.eigenvalues.cwiseProduct(z) - h * m.drift(t, z) - y).norm();
            };
            const double r1 = residual(a.value, y1), r2 = residual(b.value, y2);
            worst_residual_ratio = std::max({worst_residual_ratio, r1 / cfg.tolerance_for(y1), r2 / cfg.tolerance_for(y2)});
            const double mono = 1.0 + h * (m.lambda_min() - *m.constants.one_sided_lipschitz);
            const double lhs = (a.value - b.value).norm();
            const double rhs = ((y1 - y2).norm() + r1 + r2) / mono;
            worst_contraction_ratio = std::max(worst_contraction_ratio, lhs / ((y1 - y2).norm() / mono));
            if (lhs > rhs * (1.0 + kContractionRelSlack)) ++contraction_violations;
        } catch (const NumericalError&) {
            ++failures;
        }
    }
    Outcome o;
    o.pass = failures == 0 && contraction_violations == 0 && worst_residual_ratio <= 1.0;
    o.detail = std::to_string(kSolverDraws) + " draws, " + std::to_string(failures) + " solver failures, max residual/tol " +
               fmt(worst_residual_ratio) + ", " + std::to_string(contraction_violations) +
               " contraction violations (max ratio " + fmt(worst_contraction_ratio) + "), max Newton iters " +
               std::to_string(max_iters) + ", fallbacks " + std::to_string(fallbacks);
    return o;
}

Outcome criterion_contraction() {
    const ModelSpec m = builtin_benchmark();
    const double h = 0.05;
    const NoiseLattice lattice(20240101, h, 1);
    const GridSpec grid = make_grid(h, h, m.period, -10.0, 0.0);
    const CoalescenceReport rep = coalescence(m, grid, scalar(0.2), scalar(-0.3), lattice, SolverConfig{});
    const double c = *m.monotonicity_constant(2.0 * h);
    int violations = 0, at_roundoff = 0;
    for (std::size_t n = 1; n < rep.distances.size(); ++n) {
        const double lhs = c * rep.distances[n] * rep.distances[n];
        const double rhs = rep.distances[n - 1] * rep.distances[n - 1];
        if (lhs <= rhs * (1.0 + kContractionRelSlack)) continue;
        const double scale = std::max(rep.path_a.states[n].norm(), rep.path_b.states[n].norm());
        if (rep.distances[n] <= kRoundoffUlps * std::numeric_limits<double>::epsilon() * scale)
            ++at_roundoff;
        else
            ++violations;
    }
    const auto first = rep.first_below(kCoalescenceEps);
    Outcome o;
    o.pass = violations == 0 && first && static_cast<double>(*first) * h < kCoalescenceTime;
    o.detail = std::to_string(violations) + " squared-contraction violations over " + std::to_string(rep.distances.size() - 1) +
                " steps (" + std::to_string(at_roundoff) + " steps at the rounding floor); |D| < 1e-6 after " + (first ? fmt(static_cast<double>(*first) * h) : std::string("never")) +
               " time units (limit " + fmt(kCoalescenceTime) + ")";
    return o;
}

Outcome criterion_shift() {
    const ModelSpec m = builtin_benchmark();
    const NoiseLattice lattice(777, 0.05, 1);
    ShiftPeriodicityRequest req;
    req.periods = 30;
    const SolverConfig cfg;
    const ShiftPeriodicityReport rep = verify_shift_periodicity(m, lattice, req, scalar(0.2), cfg);
    const double worst = std::max(rep.identity_discrepancy, rep.segment_discrepancy);
    Outcome o;
    o.pass = worst <= kShiftToleranceFactor * cfg.residual_tol;
    o.detail = "k = 30: identity discrepancy " + fmt(rep.identity_discrepancy) + ", segment discrepancy " +
               fmt(rep.segment_discrepancy) + " (tolerance " + fmt(kShiftToleranceFactor * cfg.residual_tol) + ")";
    return o;
}

Outcome criterion_deterministic() {
    const ModelSpec m = scale_diffusion(builtin_benchmark(), 0.0);
    const double h = 0x1.0p-8;
    const NoiseLattice lattice(1, h, 1);
    PullbackRequest req;
    req.h = h;
    req.periods = 10;
    req.horizon_start = -1.0;
    req.horizon_end = 0.0;
    const PathResult p = random_periodic_path(m, lattice, req, scalar(0.2), SolverConfig{});
    double worst = 0.0;
    for (std::size_t j = 0; j < p.states.size(); ++j)
        worst = std::max(worst, std::abs(p.states[j][0] - analytic_periodic(p.time(static_cast<std::int64_t>(j)))));
    Outcome o;
    o.pass = worst <= kDeterministicFactor * h && p.states.size() == 257;
    o.detail = "sup error over one period " + fmt(worst) + " vs 5h = " + fmt(kDeterministicFactor * h);
    return o;
}

StrongErrorRequest order_request() {
    StrongErrorRequest req;
    req.h_ref = 0x1.0p-12;
    req.h_list = {0x1.0p-4, 0x1.0p-5, 0x1.0p-6, 0x1.0p-7, 0x1.0p-8};
    req.periods = 10;
    req.num_paths = 1000;
    req.t_eval = 0.0;
    req.seed = 2023;
    req.workers = resolve_workers(0);
    return req;
}

std::string describe_tables(const std::vector<ErrorTable>& tables) {
    const ErrorTable& bem = tables[0];
    const ErrorTable& em = tables[1];
    return "BEM order " + fmt(bem.fitted_order) + " +- " + fmt(1.96 * bem.order_standard_error) + ", BEM(2^-4) " +
           fmt(bem.rows[0].rms_error) + " +- " + fmt(1.96 * bem.rows[0].standard_error) + ", EM(2^-4) " +
           fmt(em.rows[0].rms_error) + (em.rows[0].diverged ? " (diverged)" : "") + ", EM/BEM " +
           fmt(em.rows[0].rms_error / bem.rows[0].rms_error);
}

Outcome criterion_order() {
    SolverConfig cfg;
    cfg.drift_node = DriftNode::kPrevious;
    const auto tables = strong_error(builtin_benchmark(), order_request(), InitialCondition::fixed(scalar(0.2)), cfg);
    const ErrorTable& bem = tables[0];
    const ErrorTable& em = tables[1];
    auto within = [](double v, double target) { return v >= target / kErrorFactor && v <= target * kErrorFactor; };
    Outcome o;
    o.pass = bem.fitted_order >= kOrderLow && bem.fitted_order <= kOrderHigh &&
             within(bem.rows[0].rms_error, kReferenceBemError) && !em.rows[0].diverged &&
             within(em.rows[0].rms_error, kReferenceEmError);
    o.detail = "drift at left node: " + describe_tables(tables);
    return o;
}

Outcome criterion_order_next_node_report() {
    const auto tables =
        strong_error(builtin_benchmark(), order_request(), InitialCondition::fixed(scalar(0.2)), SolverConfig{});
    Outcome o;
    o.pass = true;
    o.detail = "informational, drift at right node: " + describe_tables(tables);
    return o;
}

Outcome criterion_stability() {
    const ModelSpec m = builtin_benchmark();
    const double h = 0x1.0p-3;
    const double xi = 0.2;
    const GridSpec grid = make_grid(h, h, m.period, -10.0, 0.0);
    int em_diverged = 0, bem_bounded = 0;
    double bem_sup = 0.0;
    const int lattices = 100;
    for (int s = 0; s < lattices; ++s) {
        const NoiseLattice lattice(derive_seed(99, static_cast<std::uint64_t>(s)), h, 1);
        em_diverged += simulate(m, grid, Scheme::kEm, scalar(xi), lattice, SolverConfig{}).diverged;
        const PathResult bem = simulate(m, grid, Scheme::kBem, scalar(xi), lattice, SolverConfig{});
        double sup = 0.0;
        for (const Vector& x : bem.states) sup = std::max(sup, x.norm());
        bem_sup = std::max(bem_sup, sup);
        bem_bounded += !bem.diverged && sup <= xi + 1.0;
    }
    Outcome o;
    o.pass = em_diverged == lattices && bem_bounded == lattices;
    o.detail = "h = 2^-3 on " + std::to_string(lattices) + " lattices: EM diverged " + std::to_string(em_diverged) +
               ", BEM bounded " + std::to_string(bem_bounded) + " (sup |X| " + fmt(bem_sup) + " vs |xi| + 1 = " +
               fmt(xi + 1.0) + ")";
    return o;
}

Outcome criterion_moment() {
    const ModelSpec m = builtin_benchmark();
    const double h = 0x1.0p-6;
    const GridSpec grid = make_grid(h, h, m.period, -10.0, 0.0);
    const MomentEstimate est = moment_estimate(m, grid, Scheme::kBem, InitialCondition::fixed(scalar(0.2)), 2000, 55,
                                               SolverConfig{}, resolve_workers(0));
    Outcome o;
    o.pass = est.within_bound(kMomentSeMultiplier);
    o.detail = "sup E|X|^2 = " + fmt(est.sup_mean_square) + " at t = " + fmt(est.argmax_time) + " (SE " +
               fmt(est.standard_error) + ") vs |xi|^2 + alpha = " + (est.bound ? fmt(*est.bound) : std::string("n/a")) +
               ", alpha = " + (est.alpha ? fmt(*est.alpha) : std::string("n/a"));
    return o;
}

Outcome criterion_measure() {
    const ModelSpec m = builtin_benchmark();
    const InitialCondition init = InitialCondition::fixed(scalar(0.2));
    const int workers = resolve_workers(0);

    MeasureRequest req;
    req.h = 0x1.0p-5;
    req.periods = 10;
    req.times = {-1.0, 0.0};
    req.num_paths = 5000;
    req.seed = 8;
    req.workers = workers;
    const auto ms = periodic_measure(m, req, init, SolverConfig{});
    const double dist = weak_distance(ms[0], ms[1]);
    const NoiseFloor floor = bootstrap_noise_floor(ms[0], ms[1], 200, 9);
    const bool periodic_ok = dist <= kFloorMultiplier * floor.mean;

    MeasureConvergenceRequest study;
    study.h_levels = {0x1.0p-4, 0x1.0p-5, 0x1.0p-6, 0x1.0p-7};
    study.num_paths = 5000;
    study.t = 0.0;
    study.periods = 10;
    study.seed = 10;
    study.workers = workers;
    const MeasureConvergenceTable tab = measure_convergence_study(m, study, init, SolverConfig{});
    bool monotone = true;
    std::string dists;
    for (std::size_t i = 0; i < tab.rows.size(); ++i) {
        if (i > 0 && !(tab.rows[i].distance < tab.rows[i - 1].distance)) monotone = false;
        dists += (i ? ", " : "") + fmt(tab.rows[i].distance);
    }
    Outcome o;
    o.pass = periodic_ok && monotone;
    o.detail = "d(rho_-1, rho_0) = " + fmt(dist) + " vs 3 x floor " + fmt(kFloorMultiplier * floor.mean) +
               "; level distances " + dists + (monotone ? " (decreasing)" : " (not decreasing)");
    return o;
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "implicit solve on the monotone family", 10.0, criterion_solver},
        {2, "pathwise contraction and coalescence", 1.0, criterion_contraction},
        {3, "theta-shift periodicity", 1.0, criterion_shift},
        {4, "deterministic limit", 1.0, criterion_deterministic},
        {5, "strong order", 300.0, criterion_order},
        {6, "stability contrast", 1.0, criterion_stability},
        {7, "moment bound", 30.0, criterion_moment},
        {8, "periodic measure", 120.0, criterion_measure},
    };
    int failed = 0;
    for (const Criterion& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.body();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs < c.budget_seconds;
        const bool pass = o.pass && in_time;
        failed += !pass;
        std::printf("[%s] criterion %d (%s): %s [%.2f s, budget %.0f s%s]\n", pass ? "PASS" : "FAIL", c.id, c.name,
                    o.detail.c_str(), secs, c.budget_seconds, in_time ? "" : ", over budget");
        std::fflush(stdout);
    }
    const Outcome info = criterion_order_next_node_report();
    std::printf("[INFO] criterion 5 variant: %s\n", info.detail.c_str());
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
