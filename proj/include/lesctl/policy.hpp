#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "lesctl/autodiff.hpp"
#include "lesctl/linalg.hpp"
#include "lesctl/nets.hpp"
#include "lesctl/ode.hpp"
#include "lesctl/plant.hpp"
#include "lesctl/rng.hpp"

namespace lesctl {

enum class PolicyKind { youla, residual_mlp, pure_mlp, residual_lstm, pure_lstm };

PolicyKind parse_policy_kind(const std::string& s);
std::string policy_kind_name(PolicyKind k);

/// Diagonal constructions of the stable-recurrent-unit policy.
struct Diagonals {
    Mat lambda_xhat;                             // diag(-|mu_xhat|)
    std::vector<std::complex<double>> lambda_q;  // -|mu_re| + j mu_im
    Mat gamma;                                   // diag(|mu_re|)
};

Diagonals build_diagonals(std::span<const double> mu_xhat, std::span<const double> mu_q_re,
                          std::span<const double> mu_q_im);

/// Generic Q-policy (error observer + free stable dynamics + residual
/// readout around u = K xhat). Used by the condition checker and the
/// necessity transform; evaluation is untaped.
struct GenericQPolicy {
    int n = 0;     // plant state dim
    int n_q = 0;   // free dynamics dim
    int m = 0;     // input dim
    Mat K;         // m x n
    std::function<Vec(const Vec&)> s;                           // error field, R^n -> R^n
    std::function<Vec(const Vec&, const Vec&, const Vec&)> f_q; // (q, xhat, x) -> R^n_q
    std::function<Vec(const Vec&, const Vec&, const Vec&)> h_q; // (q, xhat, x) -> R^m
    Vec xhat0;  // initial observer state
    Vec q0;     // initial free state
};

/// Dynamic state-feedback controller xc' = f_c(xc, x), u = h_c(xc, x).
struct GenericCController {
    int n_c = 0;
    int n = 0;
    int m = 0;
    std::function<Vec(const Vec&, const Vec&)> f_c;  // (xc, x) -> R^n_c
    std::function<Vec(const Vec&, const Vec&)> h_c;  // (xc, x) -> R^m
    Vec xc0;
};

struct ConditionWitness {
    bool pass = false;
    std::string detail;
};

struct ConditionsReport {
    ConditionWitness i, ii, iii, iv;
    bool all() const { return i.pass && ii.pass && iii.pass && iv.pass; }
};

/// Checks the four sufficiency conditions of the parametrization against a
/// plant: i) A + BK Hurwitz, ii) error field LES, iii) free dynamics LES,
/// iv) dependence on (xhat, x) only through x - xhat plus h_q(0,0,0) = 0.
/// Jacobians by central finite differences; iv sampled on 100 draws.
ConditionsReport check_conditions(const GenericQPolicy& q, const InputAffinePlant& plant,
                                  std::uint64_t seed = 12345);

struct YoulaConfig {
    int n = 4;
    int m = 1;
    int n_q = 16;
    std::vector<int> readout_hidden{64, 64};  // phi3 hidden widths (no-bias net)
    int init_hidden = 48;                     // phi1/phi2 hidden width
};

template <class S>
struct YoulaRates {
    std::vector<S> u, dxhat, dq_re, dq_im;
};

/// The stable-recurrent-unit residual policy: a fixed linear gain K plus a
/// learnable internal system whose modes are diagonal and stable by
/// construction. Parameter slices: mu_xhat, mu_q_re, mu_q_im, B_q, phi1,
/// phi2, nu, phi3.
class YoulaPolicy {
public:
    YoulaPolicy(const YoulaConfig& cfg, Mat K, CartPoleParams pp, ObstacleField obs);

    const YoulaConfig& config() const { return cfg_; }
    const Mat& gain() const { return K_; }
    const CartPoleParams& plant_params() const { return pp_; }
    const ObstacleField& obstacles() const { return obs_; }
    const nets::MlpSpec& phi1_spec() const { return phi1_; }
    const nets::MlpSpec& phi2_spec() const { return phi2_; }
    const nets::MlpSpec& phi3_spec() const { return phi3_; }

    int param_count() const { return static_cast<int>(layout_template_.size()); }
    ParamStore zero_params() const { return layout_template_; }
    ParamStore init_params(std::uint64_t seed) const;

    /// Augmented closed-loop state: (x, xhat, q_re, q_im, running cost).
    int aug_dim() const { return 2 * cfg_.n + 2 * cfg_.n_q + 1; }

    template <class S>
    struct Weights {
        std::span<const S> mu_xhat, mu_q_re, mu_q_im, B_q, phi1, phi2, nu, phi3;
    };

    template <class S>
    Weights<S> weights(std::span<const S> p) const {
        if (static_cast<int>(p.size()) != param_count())
            throw DimensionError("YoulaPolicy: parameter vector length mismatch");
        Weights<S> w;
        w.mu_xhat = p.subspan(off_mu_xhat_, cfg_.n);
        w.mu_q_re = p.subspan(off_mu_q_re_, cfg_.n_q);
        w.mu_q_im = p.subspan(off_mu_q_im_, cfg_.n_q);
        w.B_q = p.subspan(off_B_q_, static_cast<std::size_t>(cfg_.n_q) * cfg_.n);
        w.phi1 = p.subspan(off_phi1_, phi1_.param_count());
        w.phi2 = p.subspan(off_phi2_, phi2_.param_count());
        w.nu = p.subspan(off_nu_, cfg_.n_q);
        w.phi3 = p.subspan(off_phi3_, phi3_.param_count());
        return w;
    }

    /// The input (gain on xhat plus the no-bias readout of [Re q; x - xhat]),
    /// then the observer and mode rates, with the complex diagonal dynamics
    /// realized in real pairs.
    template <class S>
    YoulaRates<S> rhs(std::span<const S> p, std::span<const S> x, std::span<const S> xhat,
                      std::span<const S> q_re, std::span<const S> q_im) const {
        using std::fabs;
        const int n = cfg_.n, n_q = cfg_.n_q;
        const Weights<S> w = weights(p);

        std::vector<S> e(n, x[0]);
        for (int i = 0; i < n; ++i) e[i] = x[i] - xhat[i];

        std::vector<S> mlp_in;
        mlp_in.reserve(n_q + n);
        mlp_in.insert(mlp_in.end(), q_re.begin(), q_re.end());
        mlp_in.insert(mlp_in.end(), e.begin(), e.end());
        std::vector<S> resid = nets::mlp_forward(phi3_, w.phi3, std::span<const S>(mlp_in));

        YoulaRates<S> out;
        out.u.reserve(cfg_.m);
        for (int i = 0; i < cfg_.m; ++i) {
            S ui = K_(i, 0) * xhat[0];
            for (int j = 1; j < n; ++j) ui = ui + K_(i, j) * xhat[j];
            out.u.push_back(ui + resid[i]);
        }

        std::vector<S> fx = cartpole_f(x, pp_);
        std::vector<S> gx = cartpole_g(x, pp_);
        out.dxhat.reserve(n);
        for (int i = 0; i < n; ++i)
            out.dxhat.push_back(fx[i] + fabs(w.mu_xhat[i]) * e[i] + gx[i] * out.u[0]);

        std::vector<S> Bqe = nets::dense(w.B_q, n_q, n, std::span<const S>(e));
        out.dq_re.reserve(n_q);
        out.dq_im.reserve(n_q);
        for (int i = 0; i < n_q; ++i) {
            S a = fabs(w.mu_q_re[i]);
            out.dq_re.push_back(a * Bqe[i] - a * q_re[i] - w.mu_q_im[i] * q_im[i]);
            out.dq_im.push_back(w.mu_q_im[i] * q_re[i] - a * q_im[i]);
        }
        return out;
    }

    /// Closed-loop augmented field including the running-cost channel.
    template <class S>
    std::vector<S> field(std::span<const S> p, const std::vector<S>& z) const {
        const int n = cfg_.n, n_q = cfg_.n_q;
        std::span<const S> zz(z);
        auto x = zz.subspan(0, n);
        auto xhat = zz.subspan(n, n);
        auto q_re = zz.subspan(2 * n, n_q);
        auto q_im = zz.subspan(2 * n + n_q, n_q);

        YoulaRates<S> r = rhs(p, x, xhat, q_re, q_im);
        std::vector<S> fx = cartpole_f(x, pp_);
        std::vector<S> gx = cartpole_g(x, pp_);

        std::vector<S> dz;
        dz.reserve(aug_dim());
        for (int i = 0; i < n; ++i) dz.push_back(fx[i] + gx[i] * r.u[0]);
        for (int i = 0; i < n; ++i) dz.push_back(r.dxhat[i]);
        for (int i = 0; i < n_q; ++i) dz.push_back(r.dq_re[i]);
        for (int i = 0; i < n_q; ++i) dz.push_back(r.dq_im[i]);
        dz.push_back(stage_cost(x, obs_, pp_));
        return dz;
    }

    /// Learned initialization: xhat0 = x0 + MLP(x0; phi1) and
    /// q0 = nu .* MLP(x0; phi2), with a zero imaginary part.
    template <class S>
    std::vector<S> initial_state(std::span<const S> p, std::span<const double> x0) const {
        const int n = cfg_.n, n_q = cfg_.n_q;
        const Weights<S> w = weights(p);
        std::vector<S> x0s;
        x0s.reserve(n);
        for (int i = 0; i < n; ++i) x0s.push_back(detail::make_like(p[0], x0[i]));

        std::vector<S> xh = nets::mlp_forward(phi1_, w.phi1, std::span<const S>(x0s));
        std::vector<S> q = nets::mlp_forward(phi2_, w.phi2, std::span<const S>(x0s));

        std::vector<S> z;
        z.reserve(aug_dim());
        for (int i = 0; i < n; ++i) z.push_back(x0s[i]);
        for (int i = 0; i < n; ++i) z.push_back(x0s[i] + xh[i]);
        for (int i = 0; i < n_q; ++i) z.push_back(w.nu[i] * q[i]);
        for (int i = 0; i < n_q; ++i) z.push_back(detail::make_like(p[0], 0.0));
        z.push_back(detail::make_like(p[0], 0.0));
        return z;
    }

    template <class S>
    std::vector<S> control(std::span<const S> p, const std::vector<S>& z) const {
        const int n = cfg_.n, n_q = cfg_.n_q;
        std::span<const S> zz(z);
        YoulaRates<S> r = rhs(p, zz.subspan(0, n), zz.subspan(n, n), zz.subspan(2 * n, n_q),
                              zz.subspan(2 * n + n_q, n_q));
        return std::move(r.u);
    }

    template <class S>
    std::vector<S> step(std::span<const S> p, const std::vector<S>& z, double h) const {
        return rk4_step<S>([&](const std::vector<S>& zz) { return field(p, zz); }, z, h);
    }

    /// View as the generic interface (q stacked as [q_re; q_im]).
    GenericQPolicy as_generic(const ParamStore& params) const;

private:
    YoulaConfig cfg_;
    Mat K_;
    CartPoleParams pp_;
    ObstacleField obs_;
    nets::MlpSpec phi1_, phi2_, phi3_;
    std::size_t off_mu_xhat_ = 0, off_mu_q_re_ = 0, off_mu_q_im_ = 0, off_B_q_ = 0, off_phi1_ = 0,
                off_phi2_ = 0, off_nu_ = 0, off_phi3_ = 0;
    ParamStore layout_template_;
};

/// Static-or-residual feedforward baseline: u = [K x +] MLP(x).
class MlpPolicy {
public:
    MlpPolicy(bool residual, Mat K, nets::MlpSpec net, CartPoleParams pp, ObstacleField obs);

    bool residual() const { return residual_; }
    const Mat& gain() const { return K_; }
    const nets::MlpSpec& net_spec() const { return net_; }
    const CartPoleParams& plant_params() const { return pp_; }
    const ObstacleField& obstacles() const { return obs_; }
    int param_count() const { return net_.param_count(); }
    ParamStore zero_params() const { return layout_template_; }
    ParamStore init_params(std::uint64_t seed) const;

    int aug_dim() const { return n_ + 1; }

    template <class S>
    std::vector<S> control_of_x(std::span<const S> p, std::span<const S> x) const {
        std::vector<S> u = nets::mlp_forward(net_, p, x);
        if (residual_)
            for (int i = 0; i < m_; ++i) {
                S ki = K_(i, 0) * x[0];
                for (int j = 1; j < n_; ++j) ki = ki + K_(i, j) * x[j];
                u[i] = ki + u[i];
            }
        return u;
    }

    template <class S>
    std::vector<S> field(std::span<const S> p, const std::vector<S>& z) const {
        std::span<const S> zz(z);
        auto x = zz.subspan(0, n_);
        std::vector<S> u = control_of_x(p, x);
        std::vector<S> fx = cartpole_f(x, pp_);
        std::vector<S> gx = cartpole_g(x, pp_);
        std::vector<S> dz;
        dz.reserve(aug_dim());
        for (int i = 0; i < n_; ++i) dz.push_back(fx[i] + gx[i] * u[0]);
        dz.push_back(stage_cost(x, obs_, pp_));
        return dz;
    }

    template <class S>
    std::vector<S> initial_state(std::span<const S> p, std::span<const double> x0) const {
        std::vector<S> z;
        z.reserve(aug_dim());
        for (int i = 0; i < n_; ++i) z.push_back(detail::make_like(p[0], x0[i]));
        z.push_back(detail::make_like(p[0], 0.0));
        return z;
    }

    template <class S>
    std::vector<S> control(std::span<const S> p, const std::vector<S>& z) const {
        return control_of_x(p, std::span<const S>(z).subspan(0, n_));
    }

    template <class S>
    std::vector<S> step(std::span<const S> p, const std::vector<S>& z, double h) const {
        return rk4_step<S>([&](const std::vector<S>& zz) { return field(p, zz); }, z, h);
    }

private:
    bool residual_;
    int n_ = 4, m_ = 1;
    Mat K_;
    nets::MlpSpec net_;
    CartPoleParams pp_;
    ObstacleField obs_;
    ParamStore layout_template_;
};

/// Recurrent baseline: the cell state advances once per integration step on
/// the pre-step plant state and the control is held constant across the
/// step's stages.
class LstmPolicy {
public:
    LstmPolicy(bool residual, Mat K, nets::LstmSpec net, CartPoleParams pp, ObstacleField obs);

    bool residual() const { return residual_; }
    const nets::LstmSpec& net_spec() const { return net_; }
    const CartPoleParams& plant_params() const { return pp_; }
    const ObstacleField& obstacles() const { return obs_; }
    int param_count() const { return net_.param_count(); }
    ParamStore zero_params() const { return layout_template_; }
    ParamStore init_params(std::uint64_t seed) const;

    /// z = (x, h, c, running cost); the accumulator stays last as the
    /// rollout drivers expect.
    int aug_dim() const { return n_ + 2 * net_.hidden + 1; }

    template <class S>
    std::vector<S> initial_state(std::span<const S> p, std::span<const double> x0) const {
        std::vector<S> z;
        z.reserve(aug_dim());
        for (int i = 0; i < n_; ++i) z.push_back(detail::make_like(p[0], x0[i]));
        for (int i = n_; i < aug_dim(); ++i) z.push_back(detail::make_like(p[0], 0.0));
        return z;
    }

    template <class S>
    std::vector<S> control(std::span<const S> p, const std::vector<S>& z) const {
        std::vector<S> h, c;
        return update_and_control(p, z, h, c);
    }

    template <class S>
    std::vector<S> step(std::span<const S> p, const std::vector<S>& z, double h_step) const {
        std::vector<S> h, c;
        std::vector<S> u = update_and_control(p, z, h, c);

        std::vector<S> sub(z.begin(), z.begin() + n_);
        sub.push_back(z.back());  // running cost
        auto frozen_field = [&](const std::vector<S>& s) {
            std::span<const S> x(s.data(), n_);
            std::vector<S> fx = cartpole_f(x, pp_);
            std::vector<S> gx = cartpole_g(x, pp_);
            std::vector<S> d;
            d.reserve(n_ + 1);
            for (int i = 0; i < n_; ++i) d.push_back(fx[i] + gx[i] * u[0]);
            d.push_back(stage_cost(x, obs_, pp_));
            return d;
        };
        std::vector<S> sub_next = rk4_step<S>(frozen_field, sub, h_step);

        std::vector<S> out;
        out.reserve(aug_dim());
        out.insert(out.end(), sub_next.begin(), sub_next.begin() + n_);
        out.insert(out.end(), h.begin(), h.end());
        out.insert(out.end(), c.begin(), c.end());
        out.push_back(sub_next.back());
        return out;
    }

private:
    template <class S>
    std::vector<S> update_and_control(std::span<const S> p, const std::vector<S>& z,
                                      std::vector<S>& h, std::vector<S>& c) const {
        const int H = net_.hidden;
        std::span<const S> zz(z);
        auto x = zz.subspan(0, n_);
        h.assign(z.begin() + n_, z.begin() + n_ + H);
        c.assign(z.begin() + n_ + H, z.begin() + n_ + 2 * H);
        std::vector<S> u = nets::lstm_step(net_, p, x, h, c);
        if (residual_)
            for (int i = 0; i < m_; ++i) {
                S ki = K_(i, 0) * x[0];
                for (int j = 1; j < n_; ++j) ki = ki + K_(i, j) * x[j];
                u[i] = ki + u[i];
            }
        return u;
    }

    bool residual_;
    int n_ = 4, m_ = 1;
    Mat K_;
    nets::LstmSpec net_;
    CartPoleParams pp_;
    ObstacleField obs_;
    ParamStore layout_template_;
};

using AnyPolicy = std::variant<YoulaPolicy, MlpPolicy, LstmPolicy>;

struct PolicySizes {
    int n_q = 16;
    std::vector<int> readout_hidden{64, 64};
    int init_hidden = 48;
    std::vector<int> baseline_hidden{96, 96};
    int lstm_hidden = 48;
};

/// Builds a policy of the requested kind around gain K.
AnyPolicy make_policy(PolicyKind kind, const Mat& K, const CartPoleParams& pp,
                      const ObstacleField& obs, const PolicySizes& sizes = {});

inline int policy_param_count(const AnyPolicy& p) {
    return std::visit([](const auto& pol) { return pol.param_count(); }, p);
}
inline int policy_aug_dim(const AnyPolicy& p) {
    return std::visit([](const auto& pol) { return pol.aug_dim(); }, p);
}
inline ParamStore policy_init_params(const AnyPolicy& p, std::uint64_t seed) {
    return std::visit([&](const auto& pol) { return pol.init_params(seed); }, p);
}
inline ParamStore policy_zero_params(const AnyPolicy& p) {
    return std::visit([](const auto& pol) { return pol.zero_params(); }, p);
}

template <class S>
std::vector<S> policy_initial_state(const AnyPolicy& p, std::span<const S> params,
                                    std::span<const double> x0) {
    return std::visit([&](const auto& pol) { return pol.initial_state(params, x0); }, p);
}
template <class S>
std::vector<S> policy_step(const AnyPolicy& p, std::span<const S> params, const std::vector<S>& z,
                           double h) {
    return std::visit([&](const auto& pol) { return pol.step(params, z, h); }, p);
}
template <class S>
std::vector<S> policy_control(const AnyPolicy& p, std::span<const S> params,
                              const std::vector<S>& z) {
    return std::visit([&](const auto& pol) { return pol.control(params, z); }, p);
}

inline const CartPoleParams& policy_plant_params(const AnyPolicy& p) {
    return std::visit([](const auto& pol) -> const CartPoleParams& { return pol.plant_params(); },
                      p);
}
inline const ObstacleField& policy_obstacles(const AnyPolicy& p) {
    return std::visit([](const auto& pol) -> const ObstacleField& { return pol.obstacles(); }, p);
}

}  // namespace lesctl
