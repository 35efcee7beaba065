#include "rpsim/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "rpsim/errors.hpp"
#include "rpsim/noise.hpp"

namespace rpsim {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Slack when comparing a sampled worst case against its declared constant.
double comparison_slack(double bound) { return 1e-12 * (1.0 + std::abs(bound)); }

AssumptionCheck skipped(std::string name, std::string why) {
    AssumptionCheck c;
    c.name = std::move(name);
    c.status = CheckStatus::kSkipped;
    c.detail = std::move(why);
    return c;
}

AssumptionCheck compare(std::string name, double worst, double bound, std::string detail = {}) {
    AssumptionCheck c;
    c.name = std::move(name);
    c.worst = worst;
    c.bound = bound;
    c.status = worst <= bound + comparison_slack(bound) ? CheckStatus::kPass : CheckStatus::kFail;
    c.detail = std::move(detail);
    return c;
}

// Deterministic sampler of (t, u) points for the assumption checks.
class PointSampler {
public:
    PointSampler(std::uint64_t seed, int dimension) : seed_(seed), dimension_(dimension) {}

    double uniform() { return counter_uniform(seed_, next_++, 0, Stream::kAssumptionSampling); }

    // Uniform in the closed ball of the given radius.
    Vector in_ball(double radius) {
        Vector v(dimension_);
        const std::int64_t idx = next_++;
        for (int c = 0; c < dimension_; ++c)
            v[c] = counter_normal(seed_, idx, static_cast<std::uint32_t>(c + 1), Stream::kAssumptionSampling);
        const double n = v.norm();
        if (n == 0.0) return Vector::Zero(dimension_);
        const double r = radius * std::pow(uniform(), 1.0 / dimension_);
        return v * (r / n);
    }

private:
    std::uint64_t seed_;
    int dimension_;
    std::int64_t next_ = 0;
};

}  // namespace

void ModelSpec::validate() const {
    if (eigenvalues.size() < 1) throw ConfigError("model: at least one eigenvalue required");
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
        if (!(eigenvalues[i] > 0.0) || !std::isfinite(eigenvalues[i]))
            throw ConfigError("model: eigenvalues must be positive (A positive definite)");
        if (i > 0 && eigenvalues[i] < eigenvalues[i - 1])
            throw ConfigError("model: eigenvalues must be sorted ascending");
    }
    if (!drift) throw ConfigError("model: drift callable missing");
    if (!diffusion) throw ConfigError("model: diffusion callable missing");
    if (!(period > 0.0) || !std::isfinite(period)) throw ConfigError("model: period tau must be positive");
    if (constants.one_sided_lipschitz && !(*constants.one_sided_lipschitz < lambda_min())) {
        std::ostringstream os;
        os << "model: C_f = " << *constants.one_sided_lipschitz << " must be below lambda_1 = " << lambda_min();
        throw ConfigError(os.str());
    }
    if (constants.sigma && *constants.sigma < 0.0) throw ConfigError("model: sigma must be non-negative");
}

std::optional<double> ModelSpec::monotonicity_constant(double h) const {
    if (!constants.one_sided_lipschitz) return std::nullopt;
    return 1.0 + h * (lambda_min() - *constants.one_sided_lipschitz);
}

std::optional<double> ModelSpec::moment_alpha() const {
    const auto c = constants.effective_growth();
    if (!c || !constants.sigma) return std::nullopt;
    const double s = *constants.sigma;
    return (2.0 * *c + s * s) / (2.0 * (lambda_min() - *c));
}

ModelSpec builtin_benchmark() {
    ModelSpec m;
    m.name = "benchmark-7.1";
    m.eigenvalues = Vector::Constant(1, 10.0 * std::numbers::pi);
    m.drift = [](double t, const Vector& x) {
        return Vector::Constant(x.size(), std::sin(kTwoPi * std::fmod(t, 1.0)));
    };
    m.drift_jacobian = [](double, const Vector& x) { return Matrix::Zero(x.size(), x.size()); };
    m.diffusion = [](double) { return 0.05; };
    m.period = 1.0;
    // f does not depend on x, so C_f = 0; x sin(2 pi t) <= (1 + x^2)/2 gives the growth constant.
    m.constants.one_sided_lipschitz = 0.0;
    m.constants.growth = 0.5;
    m.constants.sigma = 0.05;
    m.constants.tangent = 0.0;
    m.constants.poly_exponent = 2.0;
    m.constants.poly_lipschitz = 1.0;
    m.constants.moment_order = 6.0;
    m.note = "commonly quoted constants for this model: lambda_1 = 10, C_f = 2, sigma = 0.05; "
             "registered values are computed from the equation itself";
    return m;
}

std::vector<std::string> builtin_model_names() { return {"benchmark-7.1"}; }

ModelSpec builtin_model(std::string_view name) {
    if (name == "benchmark-7.1") return builtin_benchmark();
    throw ConfigError("unknown builtin model '" + std::string(name) + "'");
}

ModelSpec scale_diffusion(ModelSpec model, double factor) {
    model.diffusion = [g = std::move(model.diffusion), factor](double t) { return factor * g(t); };
    if (model.constants.sigma) model.constants.sigma = std::abs(factor) * *model.constants.sigma;
    return model;
}

ModelSpec linear_model(const Vector& eigenvalues, const Vector& forcing, double noise_amp, double period) {
    if (forcing.size() != eigenvalues.size()) throw ConfigError("linear model: forcing dimension mismatch");
    ModelSpec m;
    m.name = "linear";
    m.eigenvalues = eigenvalues;
    m.drift = [forcing](double, const Vector&) { return forcing; };
    m.drift_jacobian = [](double, const Vector& x) { return Matrix::Zero(x.size(), x.size()); };
    m.diffusion = [noise_amp](double) { return noise_amp; };
    m.period = period;
    m.constants.one_sided_lipschitz = 0.0;
    const double fn = forcing.norm();
    m.constants.growth = fn / 2.0;  // <u, c> <= |c| |u| <= |c| (1 + |u|^2) / 2
    m.constants.sigma = std::abs(noise_amp);
    m.constants.tangent = fn;
    return m;
}

ModelSpec PolyTrigFamily::build(std::string name) const {
    ModelSpec m;
    m.name = std::move(name);
    m.eigenvalues = Eigen::Map<const Vector>(eigenvalues.data(), static_cast<Eigen::Index>(eigenvalues.size()));
    auto poly = poly_coeffs;
    const double a = trig_amp, w = trig_freq;
    m.drift = [poly, a, w](double t, const Vector& x) {
        Vector out(x.size());
        const double forcing = a * std::sin(kTwoPi * w * t);
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            double acc = 0.0;
            for (auto it = poly.rbegin(); it != poly.rend(); ++it) acc = acc * x[i] + *it;  // Horner
            out[i] = acc + forcing;
        }
        return out;
    };
    m.drift_jacobian = [poly](double, const Vector& x) {
        Matrix jac = Matrix::Zero(x.size(), x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            double acc = 0.0;
            for (std::size_t k = poly.size(); k-- > 1;) acc = acc * x[i] + static_cast<double>(k) * poly[k];
            jac(i, i) = acc;
        }
        return jac;
    };
    const double ga = g_amp, gb = g_trig_amp, gw = g_trig_freq;
    m.diffusion = [ga, gb, gw](double t) { return ga + gb * std::sin(kTwoPi * gw * t); };
    m.period = period;
    m.constants = constants;
    return m;
}

InitialCondition InitialCondition::fixed(Vector value) { return {std::move(value), 0.0, 0}; }

InitialCondition InitialCondition::gaussian(Vector mean, double stddev, std::uint64_t seed) {
    if (!(stddev >= 0.0)) throw ConfigError("initial condition: stddev must be non-negative");
    return {std::move(mean), stddev, seed};
}

Vector InitialCondition::sample(std::uint64_t path_index) const {
    if (stddev_ == 0.0) return mean_;
    Vector v = mean_;
    for (Eigen::Index c = 0; c < v.size(); ++c)
        v[c] += stddev_ * counter_normal(seed_, static_cast<std::int64_t>(path_index),
                                         static_cast<std::uint32_t>(c), Stream::kInitialCondition);
    return v;
}

double InitialCondition::second_moment() const noexcept {
    return mean_.squaredNorm() + static_cast<double>(mean_.size()) * stddev_ * stddev_;
}

bool AssumptionReport::all_passed() const {
    return std::none_of(checks.begin(), checks.end(),
                        [](const AssumptionCheck& c) { return c.status == CheckStatus::kFail; });
}

const AssumptionCheck& AssumptionReport::find(std::string_view name) const {
    for (const auto& c : checks)
        if (c.name == name) return c;
    throw std::out_of_range("no assumption check named '" + std::string(name) + "'");
}

double gamma_p(double growth, double sigma, double p) {
    return (growth + (p - 1.0) * sigma * sigma / 2.0) * (2.0 + p + std::pow(2.0, p + 1.0));
}

AssumptionReport check_assumptions(const ModelSpec& model, int sample_count, double radius,
                                   std::uint64_t seed, const InitialCondition* init) {
    if (sample_count < 1) throw ConfigError("check: sample_count must be >= 1");
    if (!(radius > 0.0)) throw ConfigError("check: radius must be positive");
    const int d = model.dimension();
    const double tau = model.period;
    const auto& k = model.constants;
    AssumptionReport report;
    PointSampler sampler(seed, d);

    {
        const double lambda1 = d > 0 ? model.lambda_min() : 0.0;
        AssumptionCheck c;
        c.name = "positive_definite";
        c.worst = -lambda1;
        c.bound = 0.0;
        c.status = lambda1 > 0.0 ? CheckStatus::kPass : CheckStatus::kFail;
        c.detail = "lambda_1 > 0";
        report.checks.push_back(c);
    }

    // Periodicity of f and g on the sample.
    {
        double worst = 0.0;
        for (int i = 0; i < sample_count; ++i) {
            const double t = tau * sampler.uniform();
            const Vector u = sampler.in_ball(radius);
            const Vector f0 = model.drift(t, u);
            const Vector f1 = model.drift(t + tau, u);
            worst = std::max(worst, (f1 - f0).norm() / (1.0 + f0.norm()));
            const double g0 = model.diffusion(t);
            worst = std::max(worst, std::abs(model.diffusion(t + tau) - g0) / (1.0 + std::abs(g0)));
        }
        AssumptionCheck c;
        c.name = "periodicity";
        c.worst = worst;
        c.bound = 1e-12;
        c.status = worst <= 1e-12 ? CheckStatus::kPass : CheckStatus::kFail;
        c.detail = "relative |f(t+tau,x) - f(t,x)|, |g(t+tau) - g(t)|";
        report.checks.push_back(c);
    }

    if (k.one_sided_lipschitz) {
        AssumptionCheck c;
        c.name = "monotonicity_margin";
        c.worst = *k.one_sided_lipschitz;
        c.bound = model.lambda_min();
        c.status = c.worst < c.bound ? CheckStatus::kPass : CheckStatus::kFail;
        c.detail = "C_f < lambda_1";
        report.checks.push_back(c);

        double worst = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < sample_count; ++i) {
            const double t = tau * sampler.uniform();
            const Vector u1 = sampler.in_ball(radius);
            const Vector u2 = sampler.in_ball(radius);
            const double dist2 = (u1 - u2).squaredNorm();
            if (dist2 == 0.0) continue;
            worst = std::max(worst, (u1 - u2).dot(model.drift(t, u1) - model.drift(t, u2)) / dist2);
        }
        report.checks.push_back(compare("one_sided_lipschitz", worst, *k.one_sided_lipschitz,
                                        "<u1-u2, f(u1)-f(u2)> / |u1-u2|^2 <= C_f"));
    } else {
        report.checks.push_back(skipped("monotonicity_margin", "C_f not declared"));
        report.checks.push_back(skipped("one_sided_lipschitz", "C_f not declared"));
    }

    if (const auto growth = k.effective_growth()) {
        double worst = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < sample_count; ++i) {
            const double t = tau * sampler.uniform();
            const Vector u = sampler.in_ball(radius);
            worst = std::max(worst, u.dot(model.drift(t, u)) / (1.0 + u.squaredNorm()));
        }
        report.checks.push_back(compare("growth", worst, *growth, "<u, f(t,u)> / (1 + |u|^2) <= C"));
    } else {
        report.checks.push_back(skipped("growth", "neither growth constant nor C_f declared"));
    }

    if (k.sigma) {
        double worst = 0.0;
        for (int i = 0; i < sample_count; ++i) {
            const double t1 = tau * sampler.uniform();
            const double t2 = tau * sampler.uniform();
            const double g1 = model.diffusion(t1);
            worst = std::max(worst, std::abs(g1));
            if (t1 != t2) worst = std::max(worst, std::abs(g1 - model.diffusion(t2)) / std::abs(t1 - t2));
        }
        report.checks.push_back(compare("diffusion_bound", worst, *k.sigma, "max(|g|, Lip(g)) <= sigma"));
    } else {
        report.checks.push_back(skipped("diffusion_bound", "sigma not declared"));
    }

    if (k.tangent) {
        double worst = 0.0;
        for (int i = 0; i < sample_count; ++i) {
            const double t = tau * sampler.uniform();
            const Vector u = sampler.in_ball(radius);
            const double n2 = u.squaredNorm();
            if (n2 == 0.0) continue;
            const Vector f = model.drift(t, u);
            const Vector tangential = f - (f.dot(u) / n2) * u;
            worst = std::max(worst, tangential.norm() / (1.0 + std::sqrt(n2)));
        }
        report.checks.push_back(compare("tangent", worst, *k.tangent, "|f - (<f,u>/|u|^2) u| / (1 + |u|)"));
    } else {
        report.checks.push_back(skipped("tangent", "tangent constant not declared"));
    }

    if (k.poly_exponent && k.poly_lipschitz) {
        const double q = *k.poly_exponent;
        double worst = 0.0;
        for (int i = 0; i < sample_count; ++i) {
            const double t = tau * sampler.uniform();
            const Vector u1 = sampler.in_ball(radius);
            const Vector u2 = sampler.in_ball(radius);
            const double dist = (u1 - u2).norm();
            if (dist == 0.0) continue;
            const double weight = 1.0 + std::pow(u1.norm(), q - 1.0) + std::pow(u2.norm(), q - 1.0);
            worst = std::max(worst, (model.drift(t, u1) - model.drift(t, u2)).norm() / (weight * dist));
        }
        report.checks.push_back(compare("polynomial_lipschitz", worst, *k.poly_lipschitz,
                                        "|f(t,u1)-f(t,u2)| / ((1+|u1|^{q-1}+|u2|^{q-1})|u1-u2|), common t"));
    } else {
        report.checks.push_back(skipped("polynomial_lipschitz", "q or L not declared"));
    }

    const auto growth = k.effective_growth();
    if (k.moment_order && k.sigma && growth) {
        const double p = *k.moment_order;
        const double g = gamma_p(*growth, *k.sigma, p);
        AssumptionCheck c;
        c.name = "gamma_p";
        c.worst = g;
        c.bound = p * model.lambda_min();
        const bool order_ok = !k.poly_exponent || p >= 4.0 * *k.poly_exponent - 2.0;
        c.status = (g < c.bound && order_ok) ? CheckStatus::kPass : CheckStatus::kFail;
        std::ostringstream os;
        os << "gamma_p = (C + (p-1) sigma^2/2)(2 + p + 2^{p+1}) < p lambda_1";
        if (!order_ok) os << "; p < 4q - 2";
        c.detail = os.str();
        report.checks.push_back(c);
    } else {
        report.checks.push_back(skipped("gamma_p", "p, sigma or growth constant not declared"));
    }

    if (init && k.initial_bound) {
        report.checks.push_back(compare("initial_bound", std::sqrt(init->second_moment()), *k.initial_bound,
                                        "||xi||_{L2} <= C_xi"));
    } else {
        report.checks.push_back(skipped("initial_bound", "no initial condition or C_xi"));
    }
    return report;
}

}  // namespace rpsim
