#pragma once

#include "rpsim/model.hpp"
#include "rpsim/types.hpp"

namespace rpsim {

enum class JacobianMode { kAnalytic, kFiniteDifference };

/// Node at which the implicit drift's time argument is taken. kNext is the backward
/// Euler-Maruyama recursion proper (f evaluated at t_{j+1}); kPrevious keeps the state
/// implicit but freezes the drift's explicit time dependence at t_j.
enum class DriftNode { kNext, kPrevious };

struct SolverConfig {
    /// Relative: a solve succeeds when |G(z) - rhs| <= residual_tol * (1 + |rhs|).
    double residual_tol = 1e-12;
    int max_newton_iters = 50;
    int max_bisection_iters = 200;
    int max_step_halvings = 30;
    JacobianMode jacobian_mode = JacobianMode::kAnalytic;
    double fd_epsilon = 1e-7;
    DriftNode drift_node = DriftNode::kNext;

    void validate() const;
    [[nodiscard]] double tolerance_for(const Vector& rhs) const { return residual_tol * (1.0 + rhs.norm()); }
};

struct StepStats {
    int newton_iters = 0;
    double final_residual = 0.0;
    bool fallback_used = false;
};

struct StepResult {
    Vector value;
    StepStats stats;
};

/// t mod tau in [0, tau).
double reduce_time(double t, double tau) noexcept;

/// Solves G(z) = z + h A z - h f(t, z) = rhs. G is uniformly monotone with constant
/// 1 + h (lambda_1 - C_f), so the root is unique. Damped Newton from the solution of the
/// linear part, with bracketed bisection as a scalar fallback.
/// Throws NonConvergence or NonFiniteEvaluation.
StepResult implicit_solve(const ModelSpec& model, double t, double h, const Vector& rhs,
                          const SolverConfig& config);

/// Time arguments of one step, already reduced mod tau.
struct StepTimes {
    double drift;
    double diffusion;
};

/// x_next = x_prev - h A x_next + h f(t_drift, x_next) + g(t_diffusion) dW.
StepResult bem_step(const ModelSpec& model, StepTimes times, double h, const Vector& x_prev,
                    const Vector& dw, const SolverConfig& config);

/// Same, with the times derived from t_next: drift at t_next (or t_next - h for
/// DriftNode::kPrevious), diffusion at t_next - h.
StepResult bem_step(const ModelSpec& model, double t_next, double h, const Vector& x_prev,
                    const Vector& dw, const SolverConfig& config);

/// Forward Euler-Maruyama: x + h (-A x + f(t_prev, x)) + g(t_prev) dW.
/// Only non-finite drift values raise; blow-up is left to the caller to observe.
Vector em_step(const ModelSpec& model, double t_prev, double h, const Vector& x_prev, const Vector& dw);

}  // namespace rpsim
