#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "lesctl/autodiff.hpp"
#include "lesctl/linalg.hpp"

namespace lesctl {

namespace detail {
inline double scalar_value(double x) { return x; }
inline double scalar_value(ad::Var v) { return v.value(); }
inline double make_like(double, double c) { return c; }
inline ad::Var make_like(ad::Var v, double c) { return v.tape->constant(c); }
}  // namespace detail

struct CartPoleParams {
    double cart_mass = 1.0;    // M (kg)
    double pend_mass = 0.1;    // m (kg)
    double length = 1.0;       // L (m)
    double friction = 0.1;     // b (N s/m)
    double gravity = 9.81;     // g (m/s^2)
};

/// Drift field of the cart-pendulum; state x = (p, pdot, theta, thetadot).
template <class S>
std::vector<S> cartpole_f(std::span<const S> x, const CartPoleParams& pp) {
    using std::cos;
    using std::sin;
    const double M = pp.cart_mass, m = pp.pend_mass, L = pp.length, b = pp.friction,
                 g = pp.gravity;
    const S& pdot = x[1];
    const S& th = x[2];
    const S& thdot = x[3];
    S s = sin(th);
    S c = cos(th);
    S den = M + m * (s * s);
    std::vector<S> f;
    f.reserve(4);
    f.push_back(pdot);
    f.push_back((m * L * s * (thdot * thdot) + m * g * s * c - b * pdot) / den);
    f.push_back(thdot);
    f.push_back(((M + m) * g * s - m * L * c * s * (thdot * thdot) + b * pdot * c) / (L * den));
    return f;
}

/// Input column of the cart-pendulum (depends on theta only).
template <class S>
std::vector<S> cartpole_g(std::span<const S> x, const CartPoleParams& pp) {
    using std::cos;
    using std::sin;
    const double M = pp.cart_mass, m = pp.pend_mass, L = pp.length;
    const S& th = x[2];
    S s = sin(th);
    S c = cos(th);
    S den = M + m * (s * s);
    std::vector<S> g;
    g.reserve(4);
    g.push_back(detail::make_like(th, 0.0));
    g.push_back(1.0 / den);
    g.push_back(detail::make_like(th, 0.0));
    g.push_back(-(c / (L * den)));
    return g;
}

/// Closed-form linearization of the cart-pendulum at the upright equilibrium.
inline std::pair<Mat, Mat> cartpole_linearization(const CartPoleParams& pp) {
    const double M = pp.cart_mass, m = pp.pend_mass, L = pp.length, b = pp.friction,
                 g = pp.gravity;
    Mat A(4, 4);
    A(0, 1) = 1.0;
    A(1, 1) = -b / M;
    A(1, 2) = g * m / M;
    A(2, 3) = 1.0;
    A(3, 1) = b / (M * L);
    A(3, 2) = g * (M + m) / (M * L);
    Mat B(4, 1);
    B(1, 0) = 1.0 / M;
    B(3, 0) = -1.0 / (M * L);
    return {A, B};
}

/// Pendulum tip in the cart plane: (p + L sin theta, L cos theta).
template <class S>
std::array<S, 2> tip_position(std::span<const S> x, double L) {
    using std::cos;
    using std::sin;
    return {x[0] + L * sin(x[2]), L * cos(x[2])};
}

struct ObstacleField {
    std::array<double, 2> center1{0.0, 0.45};
    std::array<double, 2> center2{0.35, 0.75};
    double radius = 0.18;        // R
    double margin = 0.05;        // eps_safe
    double beta = 1.0;
    double kappa = 10.0;
    double gamma_state = 1.0;    // gamma_1
    double gamma_obstacle = 50.0;  // gamma_2
    double dist_smooth = 1e-9;   // delta in sqrt(|.|^2 + delta^2)
};

/// Piecewise obstacle penalty of the tip-to-center distance d:
/// zero beyond R+eps, quadratic ramp inside the margin, exponential growth
/// inside the obstacle. Branch choice follows the current value of d, so
/// gradients use the active branch's one-sided derivative.
template <class S>
S obstacle_penalty(S d, const ObstacleField& field) {
    using std::exp;
    const double R = field.radius, eps = field.margin;
    const double dv = detail::scalar_value(d);
    if (dv >= R + eps) return detail::make_like(d, 0.0);
    if (dv >= R) {
        S r = (R + eps) - d;
        return r * r;
    }
    return eps * eps + field.beta * (exp(field.kappa * (R - d)) - 1.0);
}

/// Smoothed distance from the pendulum tip to an obstacle center.
template <class S>
S tip_distance(std::span<const S> x, const std::array<double, 2>& c, double L, double delta) {
    using std::sqrt;
    auto tip = tip_position(x, L);
    S dx = tip[0] - c[0];
    S dy = tip[1] - c[1];
    return sqrt(dx * dx + dy * dy + delta * delta);
}

/// Stage cost: gamma_1 x'x + gamma_2 (phi_1 + phi_2); no input penalty.
template <class S>
S stage_cost(std::span<const S> x, const ObstacleField& field, const CartPoleParams& pp) {
    S quad = x[0] * x[0];
    for (std::size_t i = 1; i < x.size(); ++i) quad = quad + x[i] * x[i];
    S d1 = tip_distance(x, field.center1, pp.length, field.dist_smooth);
    S d2 = tip_distance(x, field.center2, pp.length, field.dist_smooth);
    return field.gamma_state * quad +
           field.gamma_obstacle * (obstacle_penalty(d1, field) + obstacle_penalty(d2, field));
}

/// Input-affine plant with its linearization at the origin.
struct InputAffinePlant {
    int n = 0;
    int m = 0;
    std::function<Vec(const Vec&)> f;
    std::function<Mat(const Vec&)> g;
    Mat A0;  // df/dx at 0
    Mat B0;  // g(0)
};

/// Returns (A, B) of the plant at the origin after checking f(0) = 0.
inline std::pair<Mat, Mat> linearize(const InputAffinePlant& plant) {
    Vec f0 = plant.f(Vec(plant.n));
    if (f0.norm() > 1e-10)
        throw NumericalError("linearize: f(0) != 0, shift the equilibrium first");
    return {plant.A0, plant.B0};
}

inline InputAffinePlant make_cartpole_plant(const CartPoleParams& pp) {
    InputAffinePlant plant;
    plant.n = 4;
    plant.m = 1;
    plant.f = [pp](const Vec& x) {
        auto f = cartpole_f<double>(std::span<const double>(x.data), pp);
        return Vec(std::move(f));
    };
    plant.g = [pp](const Vec& x) {
        auto g = cartpole_g<double>(std::span<const double>(x.data), pp);
        Mat G(4, 1);
        for (int i = 0; i < 4; ++i) G(i, 0) = g[i];
        return G;
    };
    auto [A, B] = cartpole_linearization(pp);
    plant.A0 = A;
    plant.B0 = B;
    return plant;
}

/// Two-state test plant: f = (x2, 0), g = (0, 1)'.
inline InputAffinePlant make_double_integrator_plant() {
    InputAffinePlant plant;
    plant.n = 2;
    plant.m = 1;
    plant.f = [](const Vec& x) { return Vec{x[1], 0.0}; };
    plant.g = [](const Vec&) {
        Mat G(2, 1);
        G(1, 0) = 1.0;
        return G;
    };
    plant.A0 = Mat(2, 2, {0.0, 1.0, 0.0, 0.0});
    plant.B0 = Mat(2, 1, {0.0, 1.0});
    return plant;
}

}  // namespace lesctl
