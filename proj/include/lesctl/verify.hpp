#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "lesctl/linalg.hpp"
#include "lesctl/ode.hpp"
#include "lesctl/policy.hpp"

namespace lesctl {

/// Central finite-difference Jacobian of an autonomous field at the origin.
/// Throws NumericalError("not an equilibrium") if |F(0)| > 1e-10.
Mat closed_loop_jacobian(const std::function<Vec(const Vec&)>& field, int dim,
                         double fd_step = 1e-6);

/// Jacobian of the policy's augmented closed loop at the origin, over
/// (x, xhat, q_re, q_im) for the Youla class and (x) for feedforward
/// baselines; the running-cost channel is excluded. Recurrent baselines have
/// no autonomous field (per-step cell updates), so they yield nullopt.
std::optional<Mat> policy_closed_loop_jacobian(const AnyPolicy& pol, const ParamStore& params);

struct DecayFit {
    double k = 0.0;        // overshoot constant (k * |x(0)| is the fitted intercept)
    double lambda = 0.0;   // decay rate, 1/s
    double t_start = 0.0;
    double t_end = 0.0;
    double rmse = 0.0;     // fit residual in log space
    double x0_norm = 0.0;  // |x(0)| of the trajectory the fit came from
};

/// Least-squares line on (t, log |x(t)|) over [t_start, t_end]:
/// slope -lambda, intercept log(k |x(0)|). Throws NumericalError when a
/// window sample is not strictly positive.
DecayFit fit_decay(std::span<const double> ts, std::span<const double> norms, double t_start,
                   double t_end);

struct TailReport {
    double bound = 0.0;        // M (A^p + B^p) / (p gamma) exp(-p gamma T_cut)
    double actual = 0.0;       // accumulated cost over [T_cut, T_end]
    double gamma = 0.0;        // decay rate used (min of the x and u fits)
    double A = 0.0, B = 0.0;   // tail envelope constants for |x| and |u|
    bool pointwise_ok = false; // l <= M (|x|^p + |u|^p) held on the tail grid
    bool pass = false;         // actual <= bound (only meaningful if pointwise_ok)
};

/// Checks the truncated-cost tail bound on a finished rollout; state_dim
/// selects the plant-state block of the augmented state.
TailReport tail_bound_check(const Rollout& r, int state_dim, double p, double M, double T_cut);

}  // namespace lesctl
