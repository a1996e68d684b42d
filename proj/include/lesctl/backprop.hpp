#pragma once

#include <span>
#include <vector>

#include "lesctl/autodiff.hpp"
#include "lesctl/ode.hpp"
#include "lesctl/policy.hpp"

namespace lesctl {

/// Untaped closed-loop simulation recording the full trajectory, inputs at
/// grid states, and stage-cost samples.
inline Rollout simulate(const AnyPolicy& pol, const ParamStore& params, const Vec& x0, double h,
                        int nsteps) {
    std::span<const double> p(params.values());
    std::vector<double> z0 = policy_initial_state<double>(pol, p, std::span<const double>(x0.data));
    const CartPoleParams& pp = policy_plant_params(pol);
    const ObstacleField& obs = policy_obstacles(pol);

    auto stepper = [&](const std::vector<double>& z) { return policy_step<double>(pol, p, z, h); };
    auto readout = [&](const std::vector<double>& z) {
        std::vector<double> u = policy_control<double>(pol, p, z);
        std::span<const double> x(z.data(), 4);
        return std::pair<std::vector<double>, double>(std::move(u), stage_cost(x, obs, pp));
    };
    return rollout(stepper, z0, h, nsteps, readout);
}

/// J_T of the unrolled closed loop recorded on one tape; use for small step
/// counts (whole-tape gradients via ad::grad).
inline ad::Var rollout_cost_var(const AnyPolicy& pol, std::span<const ad::Var> params,
                                const Vec& x0, double h, int nsteps) {
    std::vector<ad::Var> z =
        policy_initial_state<ad::Var>(pol, params, std::span<const double>(x0.data));
    for (int k = 0; k < nsteps; ++k) z = policy_step<ad::Var>(pol, params, z, h);
    return z.back();
}

/// Gradient of J_T by reverse sweeps over one-step tapes: the forward pass
/// stores the grid states, then each step is re-recorded and swept backward
/// while parameter adjoints accumulate on the tape's frozen prefix. Memory
/// stays bounded by one step's tape regardless of nsteps.
inline double rollout_cost_grad(const AnyPolicy& pol, const ParamStore& params, const Vec& x0,
                                double h, int nsteps, std::span<double> grad_out) {
    std::span<const double> p(params.values());
    if (grad_out.size() != p.size()) throw DimensionError("rollout_cost_grad: grad size mismatch");

    std::vector<std::vector<double>> zs;
    zs.reserve(nsteps + 1);
    zs.push_back(policy_initial_state<double>(pol, p, std::span<const double>(x0.data)));
    for (int k = 0; k < nsteps; ++k) zs.push_back(policy_step<double>(pol, p, zs.back(), h));
    const double cost = zs.back().back();

    ad::Tape tape;
    std::vector<ad::Var> pv = tape.leaves(p);
    tape.freeze_prefix();
    std::span<const ad::Var> pvs(pv);

    const std::size_t dim = zs.front().size();
    std::vector<double> lambda(dim, 0.0);
    lambda.back() = 1.0;  // dJ/d(accumulator at T)

    std::vector<double> lambda_next(dim);
    for (int k = nsteps - 1; k >= 0; --k) {
        tape.clear();
        std::vector<ad::Var> zv = tape.leaves(zs[k]);
        std::vector<ad::Var> znext = policy_step<ad::Var>(pol, pvs, zv, h);
        for (std::size_t i = 0; i < dim; ++i)
            if (lambda[i] != 0.0) tape.seed(znext[i], lambda[i]);
        tape.reverse();
        for (std::size_t i = 0; i < dim; ++i) lambda_next[i] = tape.adjoint(zv[i]);
        lambda.swap(lambda_next);
    }

    tape.clear();
    std::vector<ad::Var> z0v =
        policy_initial_state<ad::Var>(pol, pvs, std::span<const double>(x0.data));
    for (std::size_t i = 0; i < dim; ++i)
        if (lambda[i] != 0.0) tape.seed(z0v[i], lambda[i]);
    tape.reverse();

    for (std::size_t j = 0; j < p.size(); ++j) grad_out[j] = tape.adjoint(pv[j]);
    return cost;
}

}  // namespace lesctl
