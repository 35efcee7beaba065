#include "rpsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>

#include "rpsim/csv.hpp"
#include "rpsim/errors.hpp"
#include "rpsim/parallel.hpp"

namespace rpsim {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::int64_t time_to_index(double t, double step, const char* what) {
    const double pos = t / step;
    const double nearest = std::round(pos);
    if (std::abs(pos - nearest) > 1e-9 * std::max(1.0, std::abs(pos))) {
        std::ostringstream os;
        os << what << ": time " << t << " is not a multiple of " << step;
        throw AlignmentError(os.str());
    }
    return static_cast<std::int64_t>(nearest);
}

// Per-path output of the strong-error experiment for one (scheme, level).
struct LevelErrors {
    bool diverged = false;
    std::vector<double> final_period_sq;  // |e|^2 on the last n + 1 nodes; back() is t_eval
};

}  // namespace

double compensated_sum(std::span<const double> values) noexcept {
    double sum = 0.0, c = 0.0;
    for (double v : values) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v))
            c += (sum - t) + v;
        else
            c += (v - t) + sum;
        sum = t;
    }
    return sum + c;
}

SampleStats sample_stats(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n == 0) throw InsufficientData("sample_stats: empty sample");
    SampleStats s;
    s.mean = compensated_sum(values) / static_cast<double>(n);
    if (n > 1) {
        std::vector<double> dev(n);
        for (std::size_t i = 0; i < n; ++i) dev[i] = (values[i] - s.mean) * (values[i] - s.mean);
        s.variance = compensated_sum(dev) / static_cast<double>(n - 1);
        s.standard_error = std::sqrt(s.variance / static_cast<double>(n));
    }
    return s;
}

OrderFit fit_order(const ErrorTable& table) {
    std::vector<double> xs, ys;
    for (const auto& row : table.rows) {
        if (row.diverged || !(row.rms_error > 0.0) || !std::isfinite(row.rms_error)) continue;
        xs.push_back(std::log2(row.h));
        ys.push_back(std::log2(row.rms_error));
    }
    if (xs.size() < 3) throw InsufficientData("order fit needs at least three non-diverged rows");
    const double n = static_cast<double>(xs.size());
    const double mx = compensated_sum(xs) / n;
    const double my = compensated_sum(ys) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx == 0.0) throw InsufficientData("order fit needs at least two distinct step sizes");
    OrderFit fit;
    fit.order = sxy / sxx;
    fit.intercept = my - fit.order * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        fit.residuals.push_back(ys[i] - (fit.intercept + fit.order * xs[i]));
        ssr += fit.residuals.back() * fit.residuals.back();
    }
    fit.order_standard_error = std::sqrt(ssr / (n - 2.0) / sxx);
    return fit;
}

std::vector<ErrorTable> strong_error(const ModelSpec& model, const StrongErrorRequest& req,
                                     const InitialCondition& init, const SolverConfig& config) {
    model.validate();
    config.validate();
    if (req.h_list.empty()) throw ConfigError("strong_error: h_list is empty");
    if (req.num_paths < 2) throw ConfigError("strong_error: num_paths must be >= 2");
    if (req.periods < 1) throw ConfigError("strong_error: periods must be >= 1");
    if (init.dimension() != model.dimension()) throw ConfigError("strong_error: initial condition dimension mismatch");

    const double tau = model.period;
    const double t_start = -static_cast<double>(req.periods) * tau;
    const GridSpec ref_grid = make_grid(req.h_ref, req.h_ref, tau, t_start, req.t_eval);
    std::vector<GridSpec> grids;
    for (double h : req.h_list) grids.push_back(make_grid(req.h_ref, h, tau, t_start, req.t_eval));

    const std::size_t n_levels = grids.size();
    const std::size_t n_schemes = req.schemes.size();
    const auto paths = static_cast<std::size_t>(req.num_paths);
    // results[path][scheme * n_levels + level]
    std::vector<std::vector<LevelErrors>> results(paths);

    parallel_for(paths, req.workers, [&](std::size_t m) {
        const NoiseLattice lattice(derive_seed(req.seed, m), req.h_ref, model.dimension());
        std::unique_ptr<IncrementTable> table;
        if (req.precompute_increments)
            table = std::make_unique<IncrementTable>(lattice, ref_grid.start_index, ref_grid.count);
        const IncrementSource& noise = table ? static_cast<const IncrementSource&>(*table) : lattice;

        const Vector x0 = init.sample(m);
        const PathResult ref = simulate(model, ref_grid, Scheme::kBem, x0, noise, config);

        auto& out = results[m];
        out.resize(n_schemes * n_levels);
        for (std::size_t s = 0; s < n_schemes; ++s) {
            for (std::size_t l = 0; l < n_levels; ++l) {
                const GridSpec& g = grids[l];
                const PathResult run = simulate(model, g, req.schemes[s], x0, noise, config);
                LevelErrors& le = out[s * n_levels + l];
                if (run.diverged) {
                    le.diverged = true;
                    continue;
                }
                const std::int64_t n = g.period_steps;
                le.final_period_sq.reserve(static_cast<std::size_t>(n + 1));
                for (std::int64_t j = g.count - n; j <= g.count; ++j) {
                    const Vector& coarse = run.states[static_cast<std::size_t>(j)];
                    const Vector& fine = ref.states[static_cast<std::size_t>(j * g.multiple)];
                    le.final_period_sq.push_back((coarse - fine).squaredNorm());
                }
            }
        }
    });

    std::vector<ErrorTable> tables;
    for (std::size_t s = 0; s < n_schemes; ++s) {
        ErrorTable table;
        table.scheme = req.schemes[s];
        for (std::size_t l = 0; l < n_levels; ++l) {
            ErrorRow row;
            row.h = grids[l].step();
            row.num_paths = req.num_paths;
            row.diverged = std::any_of(results.begin(), results.end(),
                                       [&](const auto& r) { return r[s * n_levels + l].diverged; });
            if (row.diverged) {
                row.rms_error = std::numeric_limits<double>::infinity();
                row.standard_error = kNaN;
                row.sup_rms_error = std::numeric_limits<double>::infinity();
                table.rows.push_back(row);
                continue;
            }
            const std::size_t nodes = results.front()[s * n_levels + l].final_period_sq.size();
            std::vector<double> column(paths);
            for (std::size_t node = 0; node < nodes; ++node) {
                for (std::size_t m = 0; m < paths; ++m) column[m] = results[m][s * n_levels + l].final_period_sq[node];
                const SampleStats st = sample_stats(column);
                const double rms = std::sqrt(st.mean);
                row.sup_rms_error = std::max(row.sup_rms_error, rms);
                if (node + 1 == nodes) {
                    row.rms_error = rms;
                    row.standard_error = rms > 0.0 ? st.standard_error / (2.0 * rms) : 0.0;
                }
            }
            table.rows.push_back(row);
        }
        try {
            const OrderFit fit = fit_order(table);
            table.fitted_order = fit.order;
            table.fit_intercept = fit.intercept;
            table.order_standard_error = fit.order_standard_error;
        } catch (const InsufficientData&) {
            table.fitted_order = kNaN;
            table.fit_intercept = kNaN;
            table.order_standard_error = kNaN;
        }
        tables.push_back(std::move(table));
    }
    return tables;
}

bool MomentEstimate::within_bound(double se_multiplier) const {
    return bound && sup_mean_square <= *bound + se_multiplier * standard_error;
}

MomentEstimate moment_estimate(const ModelSpec& model, const GridSpec& grid, Scheme scheme,
                               const InitialCondition& init, std::int64_t num_paths, std::uint64_t seed,
                               const SolverConfig& config, int workers) {
    model.validate();
    grid.validate();
    if (num_paths < 2) throw ConfigError("moment_estimate: num_paths must be >= 2");
    const auto paths = static_cast<std::size_t>(num_paths);
    const auto nodes = static_cast<std::size_t>(grid.count + 1);
    std::vector<std::vector<double>> sq(paths);

    parallel_for(paths, workers, [&](std::size_t m) {
        const NoiseLattice lattice(derive_seed(seed, m), grid.base_step, model.dimension());
        const PathResult run = simulate(model, grid, scheme, init.sample(m), lattice, config);
        auto& row = sq[m];
        row.assign(nodes, std::numeric_limits<double>::infinity());
        for (std::size_t j = 0; j < run.states.size(); ++j) row[j] = run.states[j].squaredNorm();
    });

    MomentEstimate est;
    est.sup_mean_square = -1.0;
    std::vector<double> column(paths);
    for (std::size_t j = 0; j < nodes; ++j) {
        for (std::size_t m = 0; m < paths; ++m) column[m] = sq[m][j];
        const SampleStats st = sample_stats(column);
        if (st.mean > est.sup_mean_square || std::isnan(st.mean)) {
            est.sup_mean_square = st.mean;
            est.standard_error = st.standard_error;
            est.argmax_index = static_cast<std::int64_t>(j);
            est.argmax_time = grid.time(static_cast<std::int64_t>(j));
            if (std::isnan(st.mean)) break;
        }
    }
    est.alpha = model.moment_alpha();
    if (est.alpha) est.bound = init.second_moment() + *est.alpha;
    return est;
}

void EmpiricalMeasure::validate() const {
    if (samples.size() < 2) throw ConfigError("empirical measure: at least two samples required");
    for (const auto& s : samples)
        if (!s.allFinite()) throw ConfigError("empirical measure: non-finite sample");
}

std::vector<double> EmpiricalMeasure::values() const {
    std::vector<double> v;
    v.reserve(samples.size());
    for (const auto& s : samples) v.push_back(s[0]);
    return v;
}

std::vector<EmpiricalMeasure> periodic_measure(const ModelSpec& model, const MeasureRequest& req,
                                               const InitialCondition& init, const SolverConfig& config) {
    model.validate();
    if (req.num_paths < 2) throw ConfigError("periodic_measure: num_paths must be >= 2 (sample count invariant)");
    if (req.times.empty()) throw ConfigError("periodic_measure: no evaluation times");
    if (req.periods < 1) throw ConfigError("periodic_measure: periods must be >= 1");
    const double base = req.base_step > 0.0 ? req.base_step : req.h;
    const double tau = model.period;
    const double t_start = -static_cast<double>(req.periods) * tau;
    const double t_last = *std::max_element(req.times.begin(), req.times.end());
    const GridSpec grid = make_grid(base, req.h, tau, t_start, t_last);
    std::vector<std::size_t> node_of;
    for (double t : req.times) {
        const std::int64_t j = time_to_index(t, req.h, "periodic_measure") - grid.start_index;
        if (j < 0) throw ConfigError("periodic_measure: evaluation time before -k tau");
        node_of.push_back(static_cast<std::size_t>(j));
    }

    const auto paths = static_cast<std::size_t>(req.num_paths);
    std::vector<std::vector<Vector>> at_times(paths);
    parallel_for(paths, req.workers, [&](std::size_t m) {
        const NoiseLattice lattice(derive_seed(req.seed, m), base, model.dimension());
        const PathResult run = simulate(model, grid, Scheme::kBem, init.sample(m), lattice, config);
        for (std::size_t node : node_of) at_times[m].push_back(run.states[node]);
    });

    std::vector<EmpiricalMeasure> out;
    for (std::size_t i = 0; i < req.times.size(); ++i) {
        EmpiricalMeasure mu;
        mu.t = req.times[i];
        mu.h = req.h;
        mu.samples.reserve(paths);
        for (std::size_t m = 0; m < paths; ++m) mu.samples.push_back(at_times[m][i]);
        out.push_back(std::move(mu));
    }
    return out;
}

namespace {

double sorted_distance(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> terms(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) terms[i] = std::min(std::abs(a[i] - b[i]), 2.0);
    return compensated_sum(terms) / static_cast<double>(terms.size());
}

}  // namespace

double weak_distance(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    if (mu.samples.empty() || nu.samples.empty()) throw ConfigError("weak_distance: empty measure");
    if (mu.samples.front().size() != 1 || nu.samples.front().size() != 1)
        throw ConfigError("weak_distance: only one-dimensional measures are supported");
    if (mu.samples.size() != nu.samples.size())
        throw ConfigError("weak_distance: sample sizes differ; resample or subsample to a common size");
    std::vector<double> a = mu.values(), b = nu.values();
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return sorted_distance(a, b);
}

NoiseFloor bootstrap_noise_floor(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, int replicates,
                                 std::uint64_t seed) {
    if (replicates < 1) throw ConfigError("bootstrap: replicates must be >= 1");
    std::vector<double> pooled = mu.values();
    const std::vector<double> other = nu.values();
    pooled.insert(pooled.end(), other.begin(), other.end());
    const std::size_t n = mu.samples.size();
    const auto pool = static_cast<std::uint64_t>(pooled.size());

    std::vector<double> dists(static_cast<std::size_t>(replicates));
    std::vector<double> a(n), b(n);
    std::int64_t counter = 0;
    for (int r = 0; r < replicates; ++r) {
        for (std::size_t i = 0; i < n; ++i) a[i] = pooled[counter_bits(seed, counter++, 0, Stream::kResampling) % pool];
        for (std::size_t i = 0; i < n; ++i) b[i] = pooled[counter_bits(seed, counter++, 0, Stream::kResampling) % pool];
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        dists[static_cast<std::size_t>(r)] = sorted_distance(a, b);
    }
    NoiseFloor floor;
    floor.mean = compensated_sum(dists) / static_cast<double>(replicates);
    std::sort(dists.begin(), dists.end());
    floor.quantile95 = dists[std::min(dists.size() - 1, static_cast<std::size_t>(0.95 * static_cast<double>(dists.size())))];
    return floor;
}

MeasureConvergenceTable measure_convergence_study(const ModelSpec& model, const MeasureConvergenceRequest& req,
                                                  const InitialCondition& init, const SolverConfig& config) {
    model.validate();
    if (req.h_levels.size() < 2) throw ConfigError("measure study: need at least two step sizes");
    if (req.num_paths < 2) throw ConfigError("measure study: num_paths must be >= 2 (sample count invariant)");
    for (std::size_t i = 1; i < req.h_levels.size(); ++i)
        if (req.h_levels[i] != 0.5 * req.h_levels[i - 1])
            throw ConfigError("measure study: each step size must halve the previous one");
    const double base = req.h_levels.back();
    const double tau = model.period;
    const double t_start = -static_cast<double>(req.periods) * tau;
    std::vector<GridSpec> grids;
    for (double h : req.h_levels) grids.push_back(make_grid(base, h, tau, t_start, req.t));
    const GridSpec& fine = grids.back();

    const auto paths = static_cast<std::size_t>(req.num_paths);
    const std::size_t levels = grids.size();
    std::vector<std::vector<Vector>> terminal(paths);
    parallel_for(paths, req.workers, [&](std::size_t m) {
        const NoiseLattice lattice(derive_seed(req.seed, m), base, model.dimension());
        const IncrementTable table(lattice, fine.start_index, fine.count);
        const Vector x0 = init.sample(m);
        for (const auto& g : grids) terminal[m].push_back(simulate(model, g, Scheme::kBem, x0, table, config).states.back());
    });

    MeasureConvergenceTable out;
    out.t = req.t;
    for (std::size_t l = 0; l < levels; ++l) {
        EmpiricalMeasure mu;
        mu.t = req.t;
        mu.h = req.h_levels[l];
        for (std::size_t m = 0; m < paths; ++m) mu.samples.push_back(terminal[m][l]);
        out.measures.push_back(std::move(mu));
    }
    for (std::size_t l = 0; l + 1 < levels; ++l) {
        MeasureConvergenceRow row;
        row.h = req.h_levels[l];
        row.h_fine = req.h_levels[l + 1];
        row.distance = weak_distance(out.measures[l], out.measures[l + 1]);
        row.noise_floor =
            bootstrap_noise_floor(out.measures[l], out.measures[l + 1], req.bootstrap_replicates, derive_seed(req.seed, l)).mean;
        row.ratio_to_previous = out.rows.empty() ? kNaN : row.distance / out.rows.back().distance;
        out.rows.push_back(row);
    }
    return out;
}

void write_error_table_csv(std::ostream& out, const ErrorTable& table) {
    out << "h,rms_error,standard_error,num_paths,diverged\n";
    for (const auto& r : table.rows)
        out << format_number(r.h) << ',' << format_number(r.rms_error) << ',' << format_number(r.standard_error) << ','
            << r.num_paths << ',' << (r.diverged ? 1 : 0) << '\n';
}

void write_order_csv(std::ostream& out, const ErrorTable& table) {
    out << "log2_h,log2_error\n";
    for (const auto& r : table.rows) {
        if (r.diverged || !(r.rms_error > 0.0)) continue;
        out << format_number(std::log2(r.h)) << ',' << format_number(std::log2(r.rms_error)) << '\n';
    }
}

void write_measure_csv(std::ostream& out, std::span<const EmpiricalMeasure> measures) {
    const Eigen::Index d = measures.empty() || measures.front().samples.empty() ? 1 : measures.front().samples.front().size();
    out << "t,sample_index";
    if (d == 1) {
        out << ",value";
    } else {
        for (Eigen::Index c = 0; c < d; ++c) out << ",value_" << (c + 1);
    }
    out << '\n';
    for (const auto& mu : measures) {
        for (std::size_t i = 0; i < mu.samples.size(); ++i) {
            out << format_number(mu.t) << ',' << i;
            for (Eigen::Index c = 0; c < d; ++c) out << ',' << format_number(mu.samples[i][c]);
            out << '\n';
        }
    }
}

}  // namespace rpsim
