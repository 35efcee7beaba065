#pragma once

// Periodic SDE models dX = [-A X + f(t, X)] dt + g(t) dW with A diagonal (eigenbasis),
// f, g periodic with period tau, plus the structural constants that drive the
// moment, contraction and error bounds.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rpsim/types.hpp"

namespace rpsim {

/// f(t, x). Must be reentrant: path workers call it concurrently.
using DriftFn = std::function<Vector(double t, const Vector& x)>;
/// Df(t, x), d x d.
using DriftJacobianFn = std::function<Matrix(double t, const Vector& x)>;
/// Scalar g(t) multiplying the d-dimensional increment.
using DiffusionFn = std::function<double(double t)>;

struct AssumptionConstants {
    /// C_f in <u1 - u2, f(t,u1) - f(t,u2)> <= C_f |u1 - u2|^2.
    std::optional<double> one_sided_lipschitz;
    /// C in <u, f(t,u)> <= C (1 + |u|^2). Defaults to one_sided_lipschitz when absent.
    std::optional<double> growth;
    /// sigma with sup|g| <= sigma and |g(t1) - g(t2)| <= sigma |t1 - t2|.
    std::optional<double> sigma;
    /// C_xi bounding the L2 norm of the initial condition.
    std::optional<double> initial_bound;
    /// \hat C_f: |f - (<f,u>/|u|^2) u| <= \hat C_f (1 + |u|).
    std::optional<double> tangent;
    /// q and L in |f(t,u1) - f(t,u2)| <= L (1 + |u1|^{q-1} + |u2|^{q-1}) |u1 - u2|.
    std::optional<double> poly_exponent;
    std::optional<double> poly_lipschitz;
    /// p >= 4q - 2 for the gamma_p < p lambda_1 condition.
    std::optional<double> moment_order;

    [[nodiscard]] std::optional<double> effective_growth() const {
        return growth ? growth : one_sided_lipschitz;
    }
};

struct ModelSpec {
    std::string name;
    Vector eigenvalues;  // lambda_1 <= ... <= lambda_d
    DriftFn drift;
    DriftJacobianFn drift_jacobian;  // optional; empty means finite differences
    DiffusionFn diffusion;
    double period = 1.0;
    AssumptionConstants constants;
    std::string note;

    [[nodiscard]] int dimension() const noexcept { return static_cast<int>(eigenvalues.size()); }
    [[nodiscard]] double lambda_min() const noexcept { return eigenvalues.minCoeff(); }

    /// Throws ConfigError on: empty/unsorted/non-positive eigenvalues, missing callables,
    /// non-positive period, or a declared C_f >= lambda_1.
    void validate() const;

    /// 1 + h (lambda_1 - C_f), the monotonicity constant of the implicit map; nullopt
    /// when C_f is not declared.
    [[nodiscard]] std::optional<double> monotonicity_constant(double h) const;

    /// alpha = (2C + sigma^2) / (2 (lambda_1 - C)) with C the growth constant.
    [[nodiscard]] std::optional<double> moment_alpha() const;
};

/// dX = -10 pi X dt + sin(2 pi t) dt + 0.05 dW, tau = 1.
ModelSpec builtin_benchmark();

/// Names accepted by builtin_model().
std::vector<std::string> builtin_model_names();

/// Throws ConfigError for an unknown name.
ModelSpec builtin_model(std::string_view name);

/// Same model with g replaced by factor * g (sigma rescaled accordingly).
ModelSpec scale_diffusion(ModelSpec model, double factor);

/// f(t, x) = forcing (constant), g(t) = noise_amp; handy closed-form reference model.
ModelSpec linear_model(const Vector& eigenvalues, const Vector& forcing, double noise_amp,
                       double period = 1.0);

/// Coordinate-wise drift f_i(t,x) = sum_k poly_coeffs[k] x_i^k + trig_amp sin(2 pi trig_freq t),
/// diffusion g(t) = g_amp + g_trig_amp sin(2 pi g_trig_freq t).
struct PolyTrigFamily {
    std::vector<double> eigenvalues;
    std::vector<double> poly_coeffs;
    double trig_amp = 0.0;
    double trig_freq = 1.0;
    double g_amp = 0.0;
    double g_trig_amp = 0.0;
    double g_trig_freq = 1.0;
    double period = 1.0;
    AssumptionConstants constants;

    [[nodiscard]] ModelSpec build(std::string name = "poly-trig") const;
};

/// xi: either a fixed vector or a seed-keyed Gaussian sampler, independent of the noise lattice.
class InitialCondition {
public:
    static InitialCondition fixed(Vector value);
    static InitialCondition gaussian(Vector mean, double stddev, std::uint64_t seed);

    [[nodiscard]] Vector sample(std::uint64_t path_index) const;
    [[nodiscard]] bool deterministic() const noexcept { return stddev_ == 0.0; }
    [[nodiscard]] int dimension() const noexcept { return static_cast<int>(mean_.size()); }
    /// E|xi|^2.
    [[nodiscard]] double second_moment() const noexcept;

private:
    InitialCondition(Vector mean, double stddev, std::uint64_t seed)
        : mean_(std::move(mean)), stddev_(stddev), seed_(seed) {}

    Vector mean_;
    double stddev_ = 0.0;
    std::uint64_t seed_ = 0;
};

enum class CheckStatus { kPass, kFail, kSkipped };

struct AssumptionCheck {
    std::string name;
    CheckStatus status = CheckStatus::kSkipped;
    double worst = 0.0;  // worst sampled value of the left-hand side ratio
    double bound = 0.0;  // declared constant it is compared against
    std::string detail;
};

struct AssumptionReport {
    std::vector<AssumptionCheck> checks;

    [[nodiscard]] bool all_passed() const;  // skipped checks do not count as failures
    [[nodiscard]] const AssumptionCheck& find(std::string_view name) const;
};

/// Monte Carlo falsification of the declared constants on [0, tau) x ball(radius).
/// Check names: periodicity, positive_definite, monotonicity_margin, one_sided_lipschitz,
/// growth, diffusion_bound, tangent, polynomial_lipschitz, gamma_p, initial_bound.
AssumptionReport check_assumptions(const ModelSpec& model, int sample_count, double radius,
                                   std::uint64_t seed, const InitialCondition* init = nullptr);

/// gamma_p = (C + (p - 1) sigma^2 / 2)(2 + p + 2^{p+1}).
double gamma_p(double growth, double sigma, double p);

}  // namespace rpsim
