#include "rpsim/stepper.hpp"

#include <cmath>
#include <sstream>

#include "rpsim/errors.hpp"

namespace rpsim {
namespace {

Vector checked_drift(const ModelSpec& model, double t, const Vector& x) {
    Vector f = model.drift(t, x);
    if (f.size() != x.size()) throw NonFiniteEvaluation("drift returned a vector of the wrong dimension");
    if (!f.allFinite()) {
        std::ostringstream os;
        os << "drift returned a non-finite value at t = " << t;
        throw NonFiniteEvaluation(os.str());
    }
    return f;
}

// G(z) - rhs
Vector residual(const ModelSpec& model, double t, double h, const Vector& z, const Vector& rhs) {
    return z + h * model.eigenvalues.cwiseProduct(z) - h * checked_drift(model, t, z) - rhs;
}

Matrix drift_jacobian(const ModelSpec& model, double t, const Vector& z, const SolverConfig& config) {
    if (config.jacobian_mode == JacobianMode::kAnalytic && model.drift_jacobian) {
        Matrix j = model.drift_jacobian(t, z);
        if (!j.allFinite()) throw NonFiniteEvaluation("drift Jacobian returned a non-finite value");
        return j;
    }
    const Eigen::Index d = z.size();
    Matrix j(d, d);
    const Vector f0 = checked_drift(model, t, z);
    Vector zp = z;
    for (Eigen::Index c = 0; c < d; ++c) {
        const double eps = config.fd_epsilon * (1.0 + std::abs(z[c]));
        zp[c] = z[c] + eps;
        j.col(c) = (checked_drift(model, t, zp) - f0) / eps;
        zp[c] = z[c];
    }
    return j;
}

// Scalar fallback: G is increasing, so bracket the root and bisect.
bool bisect_scalar(const ModelSpec& model, double t, double h, const Vector& rhs, double tol,
                   const SolverConfig& config, Vector& z, double& res) {
    auto g = [&](double x) {
        Vector v(1);
        v[0] = x;
        return residual(model, t, h, v, rhs)[0];
    };
    const double slope = model.monotonicity_constant(h).value_or(1.0);
    double x0 = z[0];
    double r0 = g(x0);
    if (std::abs(r0) <= tol) {
        res = std::abs(r0);
        return true;
    }
    double width = std::abs(r0) / slope;
    double lo, hi;
    if (r0 > 0.0) {
        hi = x0;
        lo = x0 - width;
        for (int i = 0; g(lo) > 0.0; ++i) {
            if (i > 200) return false;
            width *= 2.0;
            lo = x0 - width;
        }
    } else {
        lo = x0;
        hi = x0 + width;
        for (int i = 0; g(hi) < 0.0; ++i) {
            if (i > 200) return false;
            width *= 2.0;
            hi = x0 + width;
        }
    }
    double best_x = x0, best_r = std::abs(r0);
    for (int i = 0; i < config.max_bisection_iters; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double rm = g(mid);
        if (std::abs(rm) < best_r) {
            best_r = std::abs(rm);
            best_x = mid;
        }
        if (best_r <= tol || mid == lo || mid == hi) break;
        (rm > 0.0 ? hi : lo) = mid;
    }
    z[0] = best_x;
    res = best_r;
    return best_r <= tol;
}

}  // namespace

void SolverConfig::validate() const {
    if (!(residual_tol > 0.0)) throw ConfigError("solver: residual_tol must be positive");
    if (max_newton_iters < 1 || max_bisection_iters < 1 || max_step_halvings < 0)
        throw ConfigError("solver: iteration caps must be >= 1");
    if (!(fd_epsilon > 0.0)) throw ConfigError("solver: fd_epsilon must be positive");
}

double reduce_time(double t, double tau) noexcept {
    double r = std::fmod(t, tau);
    if (r < 0.0) r += tau;
    if (r >= tau) r = 0.0;
    return r;
}

StepResult implicit_solve(const ModelSpec& model, double t, double h, const Vector& rhs,
                          const SolverConfig& config) {
    t = reduce_time(t, model.period);
    const double tol = config.tolerance_for(rhs);
    const Eigen::Index d = rhs.size();

    StepResult out;
    Vector& z = out.value;
    z = rhs.array() / (1.0 + h * model.eigenvalues.array());
    Vector r = residual(model, t, h, z, rhs);
    double res = r.norm();

    int iters = 0;
    while (res > tol && iters < config.max_newton_iters) {
        Vector dz;
        if (d == 1) {
            const double jac = 1.0 + h * model.eigenvalues[0] - h * drift_jacobian(model, t, z, config)(0, 0);
            dz = Vector::Constant(1, -r[0] / jac);
        } else {
            Matrix jac = -h * drift_jacobian(model, t, z, config);
            jac.diagonal() += Vector::Ones(d) + h * model.eigenvalues;
            dz = jac.partialPivLu().solve(-r);
        }
        if (!dz.allFinite()) break;
        bool accepted = false;
        double scale = 1.0;
        for (int k = 0; k <= config.max_step_halvings; ++k, scale *= 0.5) {
            Vector trial = z + scale * dz;
            Vector rt = residual(model, t, h, trial, rhs);
            const double rn = rt.norm();
            if (rn < res) {
                z = std::move(trial);
                r = std::move(rt);
                res = rn;
                accepted = true;
                break;
            }
        }
        ++iters;
        if (!accepted) break;
    }

    out.stats.newton_iters = iters;
    out.stats.final_residual = res;
    if (res <= tol) return out;

    if (d == 1) {
        out.stats.fallback_used = true;
        if (bisect_scalar(model, t, h, rhs, tol, config, z, res)) {
            out.stats.final_residual = res;
            return out;
        }
    }
    std::ostringstream os;
    os << "implicit solve did not converge at t = " << t << ", h = " << h << ": residual " << res
       << " > tolerance " << tol << " after " << iters << " Newton iterations";
    throw NonConvergence(os.str());
}

StepResult bem_step(const ModelSpec& model, StepTimes times, double h, const Vector& x_prev,
                    const Vector& dw, const SolverConfig& config) {
    const double g = model.diffusion(times.diffusion);
    if (!std::isfinite(g)) throw NonFiniteEvaluation("diffusion returned a non-finite value");
    return implicit_solve(model, times.drift, h, x_prev + g * dw, config);
}

StepResult bem_step(const ModelSpec& model, double t_next, double h, const Vector& x_prev,
                    const Vector& dw, const SolverConfig& config) {
    const double tau = model.period;
    const double t_prev = reduce_time(t_next - h, tau);
    const StepTimes times{config.drift_node == DriftNode::kNext ? reduce_time(t_next, tau) : t_prev, t_prev};
    return bem_step(model, times, h, x_prev, dw, config);
}

Vector em_step(const ModelSpec& model, double t_prev, double h, const Vector& x_prev, const Vector& dw) {
    const double t = reduce_time(t_prev, model.period);
    const double g = model.diffusion(t);
    if (!std::isfinite(g)) throw NonFiniteEvaluation("diffusion returned a non-finite value");
    return x_prev + h * (checked_drift(model, t, x_prev) - model.eigenvalues.cwiseProduct(x_prev)) + g * dw;
}

}  // namespace rpsim
