#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lesctl/autodiff.hpp"
#include "lesctl/linalg.hpp"

namespace lesctl {

class OdeError : public std::runtime_error {
public:
    explicit OdeError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {
inline void check_stage_finite(const std::vector<double>& k, const char* stage) {
    for (double v : k)
        if (!std::isfinite(v)) throw OdeError(std::string("non-finite value in RK4 stage ") + stage);
}
template <class S>
void check_stage_finite(const std::vector<S>&, const char*) {
    // taped values are checked at record time; other scalar kinds unchecked
}
}  // namespace detail

/// One classical RK4 step: z + (h/6)(k1 + 2 k2 + 2 k3 + k4).
template <class S, class Field>
std::vector<S> rk4_step(Field&& f, const std::vector<S>& z, double h) {
    if (!(h > 0.0)) throw OdeError("rk4_step: step size must be positive");
    const std::size_t n = z.size();

    std::vector<S> k1 = f(z);
    detail::check_stage_finite(k1, "k1");
    if (k1.size() != n) throw DimensionError("rk4_step: field dimension mismatch");

    std::vector<S> zs(n, z[0]);
    for (std::size_t i = 0; i < n; ++i) zs[i] = z[i] + (h / 2.0) * k1[i];
    std::vector<S> k2 = f(zs);
    detail::check_stage_finite(k2, "k2");

    for (std::size_t i = 0; i < n; ++i) zs[i] = z[i] + (h / 2.0) * k2[i];
    std::vector<S> k3 = f(zs);
    detail::check_stage_finite(k3, "k3");

    for (std::size_t i = 0; i < n; ++i) zs[i] = z[i] + h * k3[i];
    std::vector<S> k4 = f(zs);
    detail::check_stage_finite(k4, "k4");

    std::vector<S> out(n, z[0]);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = z[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return out;
}

/// Uniform-grid trajectory of an augmented state whose last component
/// accumulates the running cost.
struct Rollout {
    std::vector<double> t;                    // N+1 grid times
    std::vector<std::vector<double>> z;       // N+1 augmented states
    std::vector<std::vector<double>> u;       // inputs evaluated at grid states
    std::vector<double> stage_cost;           // stage-cost samples at grid states
    double total_cost = 0.0;                  // accumulator component at t = T

    std::size_t steps() const { return t.empty() ? 0 : t.size() - 1; }
};

/// Integrates `stepper` N times from z0 with uniform step h. `readout`
/// maps a grid state to the (input vector, stage cost) pair recorded in the
/// rollout; the dynamics themselves live inside `stepper`.
template <class Stepper, class Readout>
Rollout rollout(Stepper&& stepper, const std::vector<double>& z0, double h, int nsteps,
                Readout&& readout) {
    if (nsteps < 1) throw OdeError("rollout: need at least one step");
    Rollout r;
    r.t.reserve(nsteps + 1);
    r.z.reserve(nsteps + 1);
    r.z.push_back(z0);
    r.t.push_back(0.0);
    for (int k = 0; k < nsteps; ++k) {
        try {
            r.z.push_back(stepper(r.z.back()));
        } catch (const std::exception& e) {
            throw OdeError("rollout step " + std::to_string(k) + ": " + e.what());
        }
        r.t.push_back(h * (k + 1));
    }
    for (const auto& zk : r.z) {
        auto [uk, lk] = readout(zk);
        r.u.push_back(std::move(uk));
        r.stage_cost.push_back(lk);
    }
    r.total_cost = r.z.back().back();
    return r;
}

struct ConvergenceEstimate {
    bool exact = false;   // both errors vanished (e.g. constant field)
    double order = 0.0;   // log2(e_h / e_{h/2}) otherwise
    double err_h = 0.0;
    double err_h2 = 0.0;
};

/// Richardson order estimate on a field with known solution `exact view`:
/// integrates z' = f(z) from z0 over [0, T] at steps h and h/2.
template <class Field>
ConvergenceEstimate convergence_order(Field&& f, const std::vector<double>& z0, double T, double h,
                                      const std::vector<double>& z_exact_T) {
    auto run = [&](double step) {
        const int n = static_cast<int>(std::llround(T / step));
        std::vector<double> z = z0;
        for (int k = 0; k < n; ++k) z = rk4_step<double>(f, z, step);
        double err = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            const double d = z[i] - z_exact_T[i];
            err += d * d;
        }
        return std::sqrt(err);
    };
    ConvergenceEstimate est;
    est.err_h = run(h);
    est.err_h2 = run(h / 2.0);
    if (est.err_h == 0.0 && est.err_h2 == 0.0) {
        est.exact = true;
        return est;
    }
    est.order = std::log2(est.err_h / est.err_h2);
    return est;
}

}  // namespace lesctl
