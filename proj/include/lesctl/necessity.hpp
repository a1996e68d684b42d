#pragma once

#include <functional>
#include <string>

#include "lesctl/lincontrol.hpp"
#include "lesctl/ode.hpp"
#include "lesctl/plant.hpp"
#include "lesctl/policy.hpp"

namespace lesctl {

/// The default error field s(z) = -z.
inline std::function<Vec(const Vec&)> default_error_field() {
    return [](const Vec& z) {
        Vec out(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) out[i] = -z[i];
        return out;
    };
}

struct NecessityTransform {
    GenericCController source;
    GenericQPolicy result;  // n_q = n + n_c, q split as (q1, q2)
    // Initialization protocol: xhat(0) = q1(0) = x(0), q2(0) = source.xc0.
};

/// Rewrites a dynamic state-feedback controller as an equivalent Q-policy:
///   eta = q1 + x - xhat
///   f_q(q, xhat, x) = [ f(eta) - s(x - xhat) + g(eta) h_c(q2, eta) ; f_c(q2, eta) ]
///   h_q(q, xhat, x) = -K q1 + h_c(q2, eta)
/// Preconditions: K makes A + BK Hurwitz and s is an LES error field with
/// s(0) = 0; violations throw NumericalError naming the condition.
inline NecessityTransform necessity_transform(const GenericCController& C,
                                              const InputAffinePlant& plant, const Mat& K,
                                              const std::function<Vec(const Vec&)>& s) {
    const int n = plant.n;
    if (!is_hurwitz(plant.A0 + plant.B0 * K).hurwitz)
        throw NumericalError("necessity_transform: condition i fails (A + BK not Hurwitz)");
    if (s(Vec(n)).norm() > 1e-10)
        throw NumericalError("necessity_transform: condition ii fails (s(0) != 0)");
    if (!is_hurwitz(fd_jacobian(s, Vec(n))).hurwitz)
        throw NumericalError("necessity_transform: condition ii fails (error field not LES)");

    NecessityTransform tr;
    tr.source = C;

    GenericQPolicy q;
    q.n = n;
    q.m = plant.m;
    q.n_q = n + C.n_c;
    q.K = K;
    q.s = s;
    q.xhat0 = Vec(n);
    q.q0 = Vec(q.n_q);

    auto split = [n, nc = C.n_c](const Vec& qv) {
        Vec q1(n), q2(nc);
        for (int i = 0; i < n; ++i) q1[i] = qv[i];
        for (int i = 0; i < nc; ++i) q2[i] = qv[n + i];
        return std::pair<Vec, Vec>(std::move(q1), std::move(q2));
    };
    auto eta_of = [n](const Vec& q1, const Vec& xhat, const Vec& x) {
        Vec eta(n);
        for (int i = 0; i < n; ++i) eta[i] = q1[i] + (x[i] - xhat[i]);
        return eta;
    };

    q.f_q = [C, plant, s, split, eta_of, n](const Vec& qv, const Vec& xhat, const Vec& x) {
        auto [q1, q2] = split(qv);
        const Vec eta = eta_of(q1, xhat, x);
        const Vec se = s(x - xhat);
        const Vec gh = plant.g(eta) * C.h_c(q2, eta);
        const Vec fe = plant.f(eta);
        Vec out(n + C.n_c);
        for (int i = 0; i < n; ++i) out[i] = fe[i] - se[i] + gh[i];
        const Vec fc = C.f_c(q2, eta);
        for (int i = 0; i < C.n_c; ++i) out[n + i] = fc[i];
        return out;
    };
    q.h_q = [C, K, split, eta_of, n](const Vec& qv, const Vec& xhat, const Vec& x) {
        auto [q1, q2] = split(qv);
        const Vec eta = eta_of(q1, xhat, x);
        Vec u = C.h_c(q2, eta);
        const Vec kq = K * q1;
        for (std::size_t i = 0; i < u.size(); ++i) u[i] = -kq[i] + u[i];
        return u;
    };

    tr.result = std::move(q);
    return tr;
}

/// Closed loop of the plant with a dynamic controller C; state (x, xc).
inline std::vector<double> c_loop_field(const InputAffinePlant& plant,
                                        const GenericCController& C,
                                        const std::vector<double>& z) {
    const int n = plant.n;
    Vec x(n), xc(C.n_c);
    for (int i = 0; i < n; ++i) x[i] = z[i];
    for (int i = 0; i < C.n_c; ++i) xc[i] = z[n + i];
    const Vec u = C.h_c(xc, x);
    const Vec dx = plant.f(x) + plant.g(x) * u;
    const Vec dxc = C.f_c(xc, x);
    std::vector<double> dz(n + C.n_c);
    for (int i = 0; i < n; ++i) dz[i] = dx[i];
    for (int i = 0; i < C.n_c; ++i) dz[n + i] = dxc[i];
    return dz;
}

/// Closed loop of the plant with a generic Q-policy; state (x, xhat, q).
inline std::vector<double> q_loop_field(const InputAffinePlant& plant, const GenericQPolicy& Q,
                                        const std::vector<double>& z) {
    const int n = plant.n;
    Vec x(n), xhat(n), q(Q.n_q);
    for (int i = 0; i < n; ++i) x[i] = z[i];
    for (int i = 0; i < n; ++i) xhat[i] = z[n + i];
    for (int i = 0; i < Q.n_q; ++i) q[i] = z[2 * n + i];

    Vec u = Q.K * xhat;
    const Vec hq = Q.h_q(q, xhat, x);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = u[i] + hq[i];

    const Vec fx = plant.f(x);
    const Vec gu = plant.g(x) * u;
    const Vec se = Q.s(x - xhat);
    const Vec dq = Q.f_q(q, xhat, x);

    std::vector<double> dz(2 * n + Q.n_q);
    for (int i = 0; i < n; ++i) dz[i] = fx[i] + gu[i];
    for (int i = 0; i < n; ++i) dz[n + i] = fx[i] - se[i] + gu[i];
    for (int i = 0; i < Q.n_q; ++i) dz[2 * n + i] = dq[i];
    return dz;
}

struct EquivalenceReport {
    double max_u_dev = 0.0;  // max over grid of |u_C(t) - u_Q(t)|
    double max_x_dev = 0.0;  // max over grid of |x_C(t) - x_Q(t)|
    double max_d = 0.0;      // max over grid of |xhat(t) - q1(t)|
};

/// Simulates both closed loops on the same RK4 grid from x0 and measures the
/// input/state deviations. xhat_offset shifts xhat(0) away from q1(0) to
/// exercise the mismatched-initialization failure mode.
inline EquivalenceReport equivalence_check(const GenericCController& C, const GenericQPolicy& Q,
                                           const InputAffinePlant& plant, const Vec& x0, double T,
                                           double h, double xhat_offset = 0.0) {
    const int n = plant.n;
    const int nsteps = static_cast<int>(std::llround(T / h));

    std::vector<double> zc(n + C.n_c, 0.0);
    for (int i = 0; i < n; ++i) zc[i] = x0[i];
    for (int i = 0; i < C.n_c; ++i) zc[n + i] = C.xc0[i];

    // xhat(0) = q1(0) = x0 (plus any deliberate mismatch on xhat only)
    std::vector<double> zq(2 * n + Q.n_q, 0.0);
    for (int i = 0; i < n; ++i) zq[i] = x0[i];
    for (int i = 0; i < n; ++i) zq[n + i] = x0[i] + xhat_offset;
    for (int i = 0; i < n; ++i) zq[2 * n + i] = x0[i];
    for (int i = 0; i < C.n_c; ++i) zq[2 * n + n + i] = C.xc0[i];

    auto u_of_c = [&](const std::vector<double>& z) {
        Vec x(n), xc(C.n_c);
        for (int i = 0; i < n; ++i) x[i] = z[i];
        for (int i = 0; i < C.n_c; ++i) xc[i] = z[n + i];
        return C.h_c(xc, x);
    };
    auto u_of_q = [&](const std::vector<double>& z) {
        Vec x(n), xhat(n), q(Q.n_q);
        for (int i = 0; i < n; ++i) x[i] = z[i];
        for (int i = 0; i < n; ++i) xhat[i] = z[n + i];
        for (int i = 0; i < Q.n_q; ++i) q[i] = z[2 * n + i];
        Vec u = Q.K * xhat;
        const Vec hq = Q.h_q(q, xhat, x);
        for (std::size_t i = 0; i < u.size(); ++i) u[i] = u[i] + hq[i];
        return u;
    };

    EquivalenceReport rep;
    auto measure = [&]() {
        const Vec du = u_of_c(zc) - u_of_q(zq);
        rep.max_u_dev = std::max(rep.max_u_dev, du.norm());
        double dx = 0.0, dd = 0.0;
        for (int i = 0; i < n; ++i) {
            const double ex = zc[i] - zq[i];
            dx += ex * ex;
            const double ed = zq[n + i] - zq[2 * n + i];  // xhat - q1
            dd += ed * ed;
        }
        rep.max_x_dev = std::max(rep.max_x_dev, std::sqrt(dx));
        rep.max_d = std::max(rep.max_d, std::sqrt(dd));
    };

    measure();
    for (int k = 0; k < nsteps; ++k) {
        zc = rk4_step<double>([&](const std::vector<double>& z) { return c_loop_field(plant, C, z); },
                              zc, h);
        zq = rk4_step<double>([&](const std::vector<double>& z) { return q_loop_field(plant, Q, z); },
                              zq, h);
        measure();
    }
    return rep;
}

}  // namespace lesctl
