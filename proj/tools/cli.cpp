#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rpsim/analysis.hpp"
#include "rpsim/csv.hpp"
#include "rpsim/errors.hpp"
#include "rpsim/model.hpp"
#include "rpsim/model_io.hpp"
#include "rpsim/noise.hpp"
#include "rpsim/pullback.hpp"
#include "rpsim/stepper.hpp"

namespace rpsim::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

enum class Command { kSimulate, kPeriodicity, kOrder, kMeasure, kCheck };

struct Overrides {
    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<std::string> scheme;
};

struct RunConfig {
    ModelSpec model;
    std::vector<Vector> inits;
    double h = 0.05;
    double base_step = 0.0;  // 0 means h
    std::int64_t periods = 10;
    double t_end = 0.0;
    double coalescence_eps = 1e-6;
    SolverConfig solver;
    Scheme scheme = Scheme::kBem;
    std::uint64_t seed = 1;
    int workers = 1;
    fs::path out_dir = "rpsim-out";

    std::int64_t shift_periods = 1;
    double segment_start = -4.0;
    double segment_end = -1.0;
    double r_max = 5.0;

    double h_ref = 0x1.0p-12;
    std::vector<double> h_list{0x1.0p-4, 0x1.0p-5, 0x1.0p-6, 0x1.0p-7, 0x1.0p-8};
    std::int64_t num_paths = 1000;
    double t_eval = 0.0;

    std::vector<double> t_list{-1.0, 0.0};
    std::vector<double> h_levels{0x1.0p-4, 0x1.0p-5, 0x1.0p-6, 0x1.0p-7};
    double t_study = 0.0;
    int bootstrap_replicates = 200;

    int samples = 10000;
    double radius = 5.0;

    [[nodiscard]] double lattice_step() const { return base_step > 0.0 ? base_step : h; }
};

// ---- config parsing -------------------------------------------------------------------

const std::vector<std::string> kKnownKeys{
    "model",   "h",       "base_step",     "k",        "t_end",      "coalescence_eps", "inits",
    "solver",  "scheme",  "seed",          "workers",  "out",        "shift_periods",   "segment",
    "r_max",   "h_ref",   "h_list",        "M",        "t_eval",     "t_list",          "h_levels",
    "t_study", "bootstrap_replicates",     "samples",  "radius"};

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
    throw ConfigError("config field '" + field + "': " + what);
}

double get_number(const json& j, const std::string& field) {
    if (!j.is_number()) field_error(field, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) field_error(field, "expected a finite number");
    return v;
}

std::int64_t get_integer(const json& j, const std::string& field, std::int64_t min_value) {
    if (!j.is_number_integer()) field_error(field, "expected an integer");
    const auto v = j.get<std::int64_t>();
    if (v < min_value) field_error(field, "must be >= " + std::to_string(min_value));
    return v;
}

std::vector<double> get_numbers(const json& j, const std::string& field) {
    if (!j.is_array()) field_error(field, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(get_number(j[i], field + "[" + std::to_string(i) + "]"));
    return out;
}

Vector get_state(const json& j, const std::string& field, int dimension) {
    Vector v;
    if (j.is_number()) {
        v = Vector::Constant(1, get_number(j, field));
    } else {
        const std::vector<double> xs = get_numbers(j, field);
        v = Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
    }
    if (v.size() != dimension)
        field_error(field, "dimension " + std::to_string(v.size()) + " does not match the model dimension " +
                               std::to_string(dimension));
    return v;
}

SolverConfig parse_solver(const json& j) {
    if (!j.is_object()) field_error("solver", "expected an object");
    SolverConfig s;
    for (const auto& [key, value] : j.items()) {
        const std::string field = "solver." + key;
        if (key == "residual_tol") {
            s.residual_tol = get_number(value, field);
        } else if (key == "max_newton_iters") {
            s.max_newton_iters = static_cast<int>(get_integer(value, field, 1));
        } else if (key == "max_bisection_iters") {
            s.max_bisection_iters = static_cast<int>(get_integer(value, field, 1));
        } else if (key == "max_step_halvings") {
            s.max_step_halvings = static_cast<int>(get_integer(value, field, 0));
        } else if (key == "fd_epsilon") {
            s.fd_epsilon = get_number(value, field);
        } else if (key == "jacobian") {
            if (value == "analytic")
                s.jacobian_mode = JacobianMode::kAnalytic;
            else if (value == "finite_difference")
                s.jacobian_mode = JacobianMode::kFiniteDifference;
            else
                field_error(field, "expected \"analytic\" or \"finite_difference\"");
        } else if (key == "drift_node") {
            if (value == "next")
                s.drift_node = DriftNode::kNext;
            else if (value == "previous")
                s.drift_node = DriftNode::kPrevious;
            else
                field_error(field, "expected \"next\" or \"previous\"");
        } else {
            field_error(field, "unknown field");
        }
    }
    try {
        s.validate();
    } catch (const ConfigError& e) {
        field_error("solver", e.what());
    }
    return s;
}

std::int64_t default_periods(Command cmd) { return cmd == Command::kPeriodicity ? 30 : 10; }

RunConfig load_config(Command cmd, const Overrides& ov) {
    json j = json::object();
    if (!ov.config_path.empty()) {
        std::ifstream in(ov.config_path);
        if (!in) throw ConfigError("cannot read config file '" + ov.config_path + "'");
        try {
            j = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError("config file '" + ov.config_path + "' is not valid JSON: " + e.what());
        }
        if (!j.is_object()) throw ConfigError("config file '" + ov.config_path + "': top level must be an object");
    }
    for (const auto& [key, value] : j.items())
        if (std::find(kKnownKeys.begin(), kKnownKeys.end(), key) == kKnownKeys.end()) field_error(key, "unknown field");

    RunConfig c;
    c.periods = default_periods(cmd);
    c.model = j.contains("model") ? model_from_json(j["model"]) : builtin_benchmark();
    const int d = c.model.dimension();

    if (j.contains("h")) c.h = get_number(j["h"], "h");
    if (j.contains("base_step")) c.base_step = get_number(j["base_step"], "base_step");
    if (j.contains("k")) c.periods = get_integer(j["k"], "k", 1);
    if (j.contains("t_end")) c.t_end = get_number(j["t_end"], "t_end");
    if (j.contains("coalescence_eps")) c.coalescence_eps = get_number(j["coalescence_eps"], "coalescence_eps");
    if (j.contains("solver")) c.solver = parse_solver(j["solver"]);
    if (j.contains("scheme")) {
        if (!j["scheme"].is_string()) field_error("scheme", "expected \"bem\" or \"em\"");
        c.scheme = parse_scheme(j["scheme"].get<std::string>());
    }
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) field_error("seed", "expected a non-negative integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("workers")) c.workers = static_cast<int>(get_integer(j["workers"], "workers", 0));
    if (j.contains("out")) {
        if (!j["out"].is_string()) field_error("out", "expected a path string");
        c.out_dir = j["out"].get<std::string>();
    }
    if (j.contains("inits")) {
        const json& a = j["inits"];
        if (!a.is_array() || a.empty()) field_error("inits", "expected a non-empty array of initial states");
        for (std::size_t i = 0; i < a.size(); ++i) c.inits.push_back(get_state(a[i], "inits[" + std::to_string(i) + "]", d));
    } else {
        c.inits = {Vector::Constant(d, 0.2), Vector::Constant(d, -0.3)};
    }
    if (j.contains("shift_periods")) c.shift_periods = get_integer(j["shift_periods"], "shift_periods", 1);
    if (j.contains("segment")) {
        const std::vector<double> s = get_numbers(j["segment"], "segment");
        if (s.size() != 2 || !(s[0] < s[1])) field_error("segment", "expected [start, end] with start < end");
        c.segment_start = s[0];
        c.segment_end = s[1];
    }
    if (j.contains("r_max")) c.r_max = get_number(j["r_max"], "r_max");
    if (j.contains("h_ref")) c.h_ref = get_number(j["h_ref"], "h_ref");
    if (j.contains("h_list")) c.h_list = get_numbers(j["h_list"], "h_list");
    if (j.contains("M")) c.num_paths = get_integer(j["M"], "M", 0);
    if (j.contains("t_eval")) c.t_eval = get_number(j["t_eval"], "t_eval");
    if (j.contains("t_list")) c.t_list = get_numbers(j["t_list"], "t_list");
    if (j.contains("h_levels")) c.h_levels = get_numbers(j["h_levels"], "h_levels");
    if (j.contains("t_study")) c.t_study = get_number(j["t_study"], "t_study");
    if (j.contains("bootstrap_replicates"))
        c.bootstrap_replicates = static_cast<int>(get_integer(j["bootstrap_replicates"], "bootstrap_replicates", 1));
    if (j.contains("samples")) c.samples = static_cast<int>(get_integer(j["samples"], "samples", 1));
    if (j.contains("radius")) c.radius = get_number(j["radius"], "radius");

    // Flags win over the file.
    if (ov.out_dir) c.out_dir = *ov.out_dir;
    if (ov.seed) c.seed = *ov.seed;
    if (ov.workers) {
        if (*ov.workers < 0) field_error("--workers", "must be >= 0");
        c.workers = *ov.workers;
    }
    if (ov.scheme) c.scheme = parse_scheme(*ov.scheme);
    return c;
}

// Checks every grid the command will build before any computation starts.
void validate_for(Command cmd, const RunConfig& c) {
    const double tau = c.model.period;
    const double t0 = -static_cast<double>(c.periods) * tau;
    if (c.num_paths < 2 && (cmd == Command::kOrder || cmd == Command::kMeasure))
        field_error("M", "at least two Monte Carlo paths are required (sample count >= 2)");
    switch (cmd) {
        case Command::kSimulate:
            if (!(c.coalescence_eps > 0.0)) field_error("coalescence_eps", "must be positive");
            (void)make_grid(c.lattice_step(), c.h, tau, t0, c.t_end);
            break;
        case Command::kPeriodicity:
            if (c.periods <= c.shift_periods) field_error("k", "must exceed shift_periods");
            if (c.segment_start < t0) field_error("segment", "must start after -k*tau");
            if (!(c.r_max > 0.0)) field_error("r_max", "must be positive");
            (void)make_grid(c.lattice_step(), c.h, tau, t0, c.segment_end + static_cast<double>(c.shift_periods) * tau);
            (void)make_grid(c.lattice_step(), c.h, tau, c.segment_start, c.segment_end);
            (void)make_grid(c.lattice_step(), c.h, tau, 0.0, c.r_max);
            break;
        case Command::kOrder:
            if (c.h_list.empty()) field_error("h_list", "must not be empty");
            if (c.t_eval <= t0) field_error("t_eval", "must lie after -k*tau");
            for (double h : c.h_list) (void)make_grid(c.h_ref, h, tau, t0, c.t_eval);
            break;
        case Command::kMeasure: {
            if (c.t_list.empty()) field_error("t_list", "must not be empty");
            if (c.h_levels.size() < 2) field_error("h_levels", "need at least two step sizes");
            for (std::size_t i = 1; i < c.h_levels.size(); ++i)
                if (c.h_levels[i] != 0.5 * c.h_levels[i - 1]) field_error("h_levels", "each entry must halve the previous");
            for (double t : c.t_list)
                if (t <= t0) field_error("t_list", "times must lie after -k*tau");
            (void)make_grid(c.lattice_step(), c.h, tau, t0, *std::max_element(c.t_list.begin(), c.t_list.end()));
            for (double h : c.h_levels) (void)make_grid(c.h_levels.back(), h, tau, t0, c.t_study);
            break;
        }
        case Command::kCheck:
            if (!(c.radius > 0.0)) field_error("radius", "must be positive");
            break;
    }
}

// ---- output helpers -------------------------------------------------------------------

std::ofstream open_output(const RunConfig& c, const std::string& name) {
    fs::create_directories(c.out_dir);
    const fs::path p = c.out_dir / name;
    std::ofstream f(p);
    if (!f) throw ConfigError("cannot write '" + p.string() + "'");
    return f;
}

std::string fmt(double v, int precision = 6) {
    std::ostringstream os;
    os << std::setprecision(precision) << v;
    return os.str();
}

std::string fmt_state(const Vector& x) {
    if (x.size() == 1) return fmt(x[0]);
    std::string s = "(";
    for (Eigen::Index i = 0; i < x.size(); ++i) s += (i ? ", " : "") + fmt(x[i]);
    return s + ")";
}

const char* yes_no(bool b) { return b ? "yes" : "no"; }

// ---- commands -------------------------------------------------------------------------

int cmd_simulate(const RunConfig& c, std::ostream& out) {
    const double tau = c.model.period;
    const GridSpec grid = make_grid(c.lattice_step(), c.h, tau, -static_cast<double>(c.periods) * tau, c.t_end);
    const NoiseLattice lattice(c.seed, c.lattice_step(), c.model.dimension());
    std::vector<PathResult> paths;
    for (std::size_t i = 0; i < c.inits.size(); ++i) {
        PathResult p = simulate(c.model, grid, c.scheme, c.inits[i], lattice, c.solver);
        p.pullback_periods = c.periods;
        auto f = open_output(c, "trajectory_" + std::to_string(i + 1) + ".csv");
        write_trajectory_csv(f, p);
        out << "trajectory " << (i + 1) << ": x0 = " << fmt_state(c.inits[i]) << ", ";
        if (p.diverged)
            out << "diverged at step " << *p.divergence_step << '\n';
        else
            out << "X(" << fmt(p.time(grid.count)) << ") = " << fmt_state(p.states.back()) << '\n';
        paths.push_back(std::move(p));
    }
    for (std::size_t i = 1; i < paths.size(); ++i) {
        const std::size_t n = std::min(paths[0].states.size(), paths[i].states.size());
        std::optional<std::size_t> hit;
        for (std::size_t j = 0; j < n && !hit; ++j)
            if ((paths[0].states[j] - paths[i].states[j]).norm() < c.coalescence_eps) hit = j;
        out << "coalescence 1 vs " << (i + 1) << ": ";
        if (hit)
            out << "|D| < " << fmt(c.coalescence_eps) << " from step " << *hit << " (t = " << fmt(grid.time(static_cast<std::int64_t>(*hit)))
                << ")\n";
        else
            out << "|D| never below " << fmt(c.coalescence_eps) << '\n';
        if (const auto m = c.model.monotonicity_constant(2.0 * c.h); m && c.scheme == Scheme::kBem) {
            const double d0 = (c.inits[0] - c.inits[i]).norm();
            const double steps = d0 > 0.0 ? std::ceil(2.0 * std::log(d0 / c.coalescence_eps) / std::log(*m)) : 0.0;
            out << "  envelope bound: " << fmt(std::max(0.0, steps)) << " steps\n";
        }
    }
    return kExitOk;
}

int cmd_periodicity(const RunConfig& c, std::ostream& out) {
    const NoiseLattice lattice(c.seed, c.lattice_step(), c.model.dimension());
    ShiftPeriodicityRequest req;
    req.h = c.h;
    req.periods = c.periods;
    req.shift_periods = c.shift_periods;
    req.segment_start = c.segment_start;
    req.segment_end = c.segment_end;
    const ShiftPeriodicityReport rep = verify_shift_periodicity(c.model, lattice, req, c.inits[0], c.solver);
    {
        auto f = open_output(c, "segment.csv");
        write_trajectory_csv(f, rep.segment);
        auto g = open_output(c, "segment_shifted.csv");
        write_trajectory_csv(g, rep.shifted_segment);
    }
    out << "shift identity discrepancy: " << fmt(rep.identity_discrepancy) << '\n';
    out << "max segment discrepancy: " << fmt(rep.segment_discrepancy) << " (tolerance " << fmt(rep.tolerance)
        << "): " << (rep.passed() ? "PASS" : "FAIL") << '\n';

    PathResult pinned = pullback_pinned_path(c.model, lattice, c.h, c.r_max, c.inits[0], c.solver, c.scheme);
    {
        auto f = open_output(c, "pinned.csv");
        write_trajectory_csv(f, pinned);
    }
    if (pinned.diverged) {
        out << "pinned path diverged at r = " << fmt(pinned.time(*pinned.divergence_step)) << '\n';
        return kExitOk;
    }
    // p(r + tau) and p(r) share their last r/h increments and phases; they differ only by the
    // state reached after the first period, which then contracts.
    const auto m = c.model.monotonicity_constant(2.0 * c.h);
    const std::int64_t n = pinned.grid.period_steps;
    const std::int64_t first = static_cast<std::int64_t>(std::ceil(2.0 / c.h - 1e-9));
    if (m && c.scheme == Scheme::kBem && first + n <= pinned.grid.count) {
        double worst_gap = 0.0, worst_ratio = 0.0;
        GridSpec one_period = pinned.grid;
        one_period.count = n;
        for (std::int64_t i = first; i + n <= pinned.grid.count; ++i) {
            const NoiseLattice view = lattice.shifted(pinned.grid, -(i + n));
            const Vector y = simulate(c.model, one_period, Scheme::kBem, c.inits[0], view, c.solver).states.back();
            const double envelope = std::pow(*m, -0.5 * static_cast<double>(i)) * (y - c.inits[0]).norm();
            const double gap = (pinned.states[static_cast<std::size_t>(i + n)] - pinned.states[static_cast<std::size_t>(i)]).norm();
            worst_gap = std::max(worst_gap, gap);
            if (envelope > 0.0) worst_ratio = std::max(worst_ratio, gap / envelope);
            else if (gap > 0.0) worst_ratio = INFINITY;
        }
        out << "pinned path: max |p(r + tau) - p(r)| for r >= 2 = " << fmt(worst_gap)
            << ", max ratio to envelope = " << fmt(worst_ratio) << ": " << (worst_ratio <= 1.0 + 1e-9 ? "PASS" : "FAIL")
            << '\n';
    }
    return kExitOk;
}

int cmd_order(const RunConfig& c, std::ostream& out) {
    StrongErrorRequest req;
    req.h_ref = c.h_ref;
    req.h_list = c.h_list;
    req.periods = c.periods;
    req.num_paths = c.num_paths;
    req.t_eval = c.t_eval;
    req.seed = c.seed;
    req.workers = c.workers;
    const auto tables = strong_error(c.model, req, InitialCondition::fixed(c.inits[0]), c.solver);
    for (const ErrorTable& t : tables) {
        const std::string name(to_string(t.scheme));
        {
            auto f = open_output(c, "error_" + name + ".csv");
            write_error_table_csv(f, t);
            auto g = open_output(c, "order_" + name + ".csv");
            write_order_csv(g, t);
        }
        for (const ErrorRow& r : t.rows) {
            out << name << " h = " << fmt(r.h) << ": ";
            if (r.diverged)
                out << "diverged\n";
            else
                out << "rms error " << fmt(r.rms_error) << " +- " << fmt(1.96 * r.standard_error) << '\n';
        }
        out << name << " fitted order: ";
        if (std::isnan(t.fitted_order))
            out << "n/a (fewer than three finite rows)\n";
        else
            out << fmt(t.fitted_order, 4) << " +- " << fmt(1.96 * t.order_standard_error, 3) << '\n';
    }
    if (tables.size() == 2) {
        for (std::size_t i = 0; i < tables[0].rows.size(); ++i) {
            const ErrorRow& b = tables[0].rows[i];
            const ErrorRow& e = tables[1].rows[i];
            if (b.diverged || e.diverged || !(b.rms_error > 0.0)) continue;
            out << "em/bem error ratio at h = " << fmt(b.h) << ": " << fmt(e.rms_error / b.rms_error, 4) << '\n';
            break;
        }
    }
    return kExitOk;
}

int cmd_measure(const RunConfig& c, std::ostream& out) {
    const InitialCondition init = InitialCondition::fixed(c.inits[0]);
    MeasureRequest req;
    req.h = c.h;
    req.base_step = c.lattice_step();
    req.periods = c.periods;
    req.times = c.t_list;
    req.num_paths = c.num_paths;
    req.seed = c.seed;
    req.workers = c.workers;
    const auto measures = periodic_measure(c.model, req, init, c.solver);
    {
        auto f = open_output(c, "measure.csv");
        write_measure_csv(f, measures);
    }
    const bool scalar_law = c.model.dimension() == 1;
    if (!scalar_law) out << "weak distances need d = 1; only samples were written\n";
    for (std::size_t i = 1; scalar_law && i < measures.size(); ++i) {
        const double dist = weak_distance(measures[0], measures[i]);
        const NoiseFloor floor = bootstrap_noise_floor(measures[0], measures[i], c.bootstrap_replicates, derive_seed(c.seed, 1000 + i));
        out << "distance(t = " << fmt(measures[0].t) << ", t = " << fmt(measures[i].t) << ") = " << fmt(dist)
            << ", bootstrap floor " << fmt(floor.mean) << ", within 3x floor: " << yes_no(dist <= 3.0 * floor.mean) << '\n';
    }
    if (!scalar_law) return kExitOk;

    MeasureConvergenceRequest study;
    study.h_levels = c.h_levels;
    study.num_paths = c.num_paths;
    study.t = c.t_study;
    study.periods = c.periods;
    study.seed = c.seed;
    study.workers = c.workers;
    study.bootstrap_replicates = c.bootstrap_replicates;
    const MeasureConvergenceTable tab = measure_convergence_study(c.model, study, init, c.solver);
    {
        auto f = open_output(c, "measure_study.csv");
        f << "h,h_fine,distance,noise_floor,ratio_to_previous\n";
        for (const auto& r : tab.rows)
            f << format_number(r.h) << ',' << format_number(r.h_fine) << ',' << format_number(r.distance) << ','
              << format_number(r.noise_floor) << ',' << format_number(r.ratio_to_previous) << '\n';
        for (std::size_t l = 0; l < tab.measures.size(); ++l) {
            auto g = open_output(c, "measure_level_" + std::to_string(l + 1) + ".csv");
            write_measure_csv(g, std::span(&tab.measures[l], 1));
        }
    }
    bool monotone = true;
    for (std::size_t i = 0; i < tab.rows.size(); ++i) {
        const auto& r = tab.rows[i];
        out << "h = " << fmt(r.h) << " vs " << fmt(r.h_fine) << ": distance " << fmt(r.distance) << ", floor "
            << fmt(r.noise_floor);
        if (i > 0) out << ", ratio " << fmt(r.ratio_to_previous, 4);
        out << '\n';
        if (i > 0 && r.distance >= tab.rows[i - 1].distance && r.distance > r.noise_floor) monotone = false;
    }
    out << "h^1/2 consistency: " << (monotone ? "consistent" : "inconsistent")
        << " (distances decrease with h; predicted ratio at most " << fmt(MeasureConvergenceTable::kPredictedRatio, 4)
        << ")\n";
    return kExitOk;
}

int cmd_check(const RunConfig& c, std::ostream& out) {
    const InitialCondition init = InitialCondition::fixed(c.inits[0]);
    const AssumptionReport rep = check_assumptions(c.model, c.samples, c.radius, c.seed, &init);
    auto f = open_output(c, "assumptions.csv");
    f << "name,status,worst,bound\n";
    for (const auto& chk : rep.checks) {
        const char* status = chk.status == CheckStatus::kPass ? "pass" : chk.status == CheckStatus::kFail ? "fail" : "skipped";
        f << chk.name << ',' << status << ',' << format_number(chk.worst) << ',' << format_number(chk.bound) << '\n';
        out << std::left << std::setw(22) << chk.name << std::setw(8) << status;
        if (chk.status != CheckStatus::kSkipped) out << "worst " << fmt(chk.worst) << " vs bound " << fmt(chk.bound);
        if (!chk.detail.empty()) out << "  " << chk.detail;
        out << '\n';
    }
    out << "all declared assumptions hold: " << yes_no(rep.all_passed()) << '\n';
    if (!c.model.note.empty()) out << "note: " << c.model.note << '\n';
    return kExitOk;
}

int dispatch(Command cmd, const Overrides& ov, std::ostream& out) {
    const RunConfig c = load_config(cmd, ov);
    validate_for(cmd, c);
    switch (cmd) {
        case Command::kSimulate: return cmd_simulate(c, out);
        case Command::kPeriodicity: return cmd_periodicity(c, out);
        case Command::kOrder: return cmd_order(c, out);
        case Command::kMeasure: return cmd_measure(c, out);
        case Command::kCheck: return cmd_check(c, out);
    }
    return kExitConfig;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Random periodic paths of monotone SDEs by pull-back with backward Euler-Maruyama", "rpsim"};
    app.require_subcommand(1, 1);
    Overrides ov;
    std::string out_dir, scheme;
    std::uint64_t seed = 0;
    int workers = 0;
    app.add_option("--config", ov.config_path, "JSON run configuration")->check(CLI::ExistingFile);
    auto* out_opt = app.add_option("--out", out_dir, "output directory for CSV files");
    auto* seed_opt = app.add_option("--seed", seed, "base seed of the noise lattice");
    auto* workers_opt = app.add_option("--workers", workers, "Monte Carlo worker threads (0 = all cores)");
    auto* scheme_opt = app.add_option("--scheme", scheme, "bem or em")->check(CLI::IsMember({"bem", "em"}));

    const std::map<std::string, std::pair<Command, const char*>> commands{
        {"simulate", {Command::kSimulate, "trajectories from several initial conditions on one lattice"}},
        {"periodicity", {Command::kPeriodicity, "theta-shift segment comparison and pinned pull-back path"}},
        {"order", {Command::kOrder, "strong error table and fitted order for BEM and EM"}},
        {"measure", {Command::kMeasure, "empirical periodic measures and their convergence in h"}},
        {"check", {Command::kCheck, "falsification checks of the declared model constants"}},
    };
    for (const auto& [name, entry] : commands) app.add_subcommand(name, entry.second)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }
    if (*out_opt) ov.out_dir = out_dir;
    if (*seed_opt) ov.seed = seed;
    if (*workers_opt) ov.workers = workers;
    if (*scheme_opt) ov.scheme = scheme;

    Command cmd = Command::kCheck;
    for (const auto& [name, entry] : commands)
        if (app.got_subcommand(name)) cmd = entry.first;

    try {
        return dispatch(cmd, ov, out);
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NumericalError& e) {
        err << "numerical failure";
        if (e.step_index()) err << " at step " << *e.step_index();
        err << ": " << e.what() << '\n';
        return kExitNumerical;
    } catch (const nlohmann::json::exception& e) {
        err << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const fs::filesystem_error& e) {
        err << "output error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
}

}  // namespace rpsim::cli
