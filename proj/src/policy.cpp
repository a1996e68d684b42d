#include "lesctl/policy.hpp"

#include <cmath>

#include "lesctl/lincontrol.hpp"

namespace lesctl {

namespace {

constexpr double kPi = 3.14159265358979323846;

void init_mlp_weights(const nets::MlpSpec& spec, std::span<double> w, Rng& rng,
                      double out_bound = 0.0, double out_bias_bound = 0.0) {
    std::size_t off = 0;
    const auto dims = spec.layer_dims();
    for (std::size_t l = 0; l < dims.size(); ++l) {
        const auto [rows, cols] = dims[l];
        const bool last = l + 1 == dims.size();
        double bound = 1.0 / std::sqrt(static_cast<double>(cols));
        if (out_bound > 0.0 && last) bound = out_bound;
        for (int k = 0; k < rows * cols; ++k) w[off + k] = rng.uniform(-bound, bound);
        off += static_cast<std::size_t>(rows) * cols;
        if (spec.bias) {
            if (last && out_bias_bound > 0.0)
                for (int k = 0; k < rows; ++k) w[off + k] = rng.uniform(-out_bias_bound, out_bias_bound);
            off += rows;  // hidden biases start at zero
        }
    }
}

void init_lstm_weights(const nets::LstmSpec& spec, std::span<double> w, Rng& rng) {
    const int H = spec.hidden;
    const int gate_sz = H * spec.in + H * H + H;
    const double bound = 1.0 / std::sqrt(static_cast<double>(spec.in + H));
    for (int g = 0; g < 4; ++g) {
        std::size_t off = static_cast<std::size_t>(g) * gate_sz;
        for (int k = 0; k < H * spec.in + H * H; ++k) w[off + k] = rng.uniform(-bound, bound);
        if (g == 1)  // forget-gate bias
            for (int k = 0; k < H; ++k) w[off + H * spec.in + H * H + k] = 1.0;
    }
    std::size_t off = static_cast<std::size_t>(4) * gate_sz;
    const double rbound = 1.0 / std::sqrt(static_cast<double>(H));
    for (int k = 0; k < spec.out * H; ++k) w[off + k] = rng.uniform(-rbound, rbound);
}

Vec sample_unit_ball(int dim, Rng& rng) {
    Vec g(dim);
    for (int i = 0; i < dim; ++i) g[i] = rng.normal();
    const double nrm = g.norm();
    if (nrm == 0.0) return g;
    const double r = std::pow(rng.uniform01(), 1.0 / dim);
    return (r / nrm) * g;
}

}  // namespace

PolicyKind parse_policy_kind(const std::string& s) {
    if (s == "youla") return PolicyKind::youla;
    if (s == "residual_mlp") return PolicyKind::residual_mlp;
    if (s == "pure_mlp") return PolicyKind::pure_mlp;
    if (s == "residual_lstm") return PolicyKind::residual_lstm;
    if (s == "pure_lstm") return PolicyKind::pure_lstm;
    throw std::invalid_argument("unknown policy kind: " + s);
}

std::string policy_kind_name(PolicyKind k) {
    switch (k) {
        case PolicyKind::youla: return "youla";
        case PolicyKind::residual_mlp: return "residual_mlp";
        case PolicyKind::pure_mlp: return "pure_mlp";
        case PolicyKind::residual_lstm: return "residual_lstm";
        case PolicyKind::pure_lstm: return "pure_lstm";
    }
    return "?";
}

Diagonals build_diagonals(std::span<const double> mu_xhat, std::span<const double> mu_q_re,
                          std::span<const double> mu_q_im) {
    if (mu_q_re.size() != mu_q_im.size())
        throw DimensionError("build_diagonals: mu_q slices must have equal length");
    Diagonals d;
    d.lambda_xhat = Mat(mu_xhat.size(), mu_xhat.size());
    for (std::size_t i = 0; i < mu_xhat.size(); ++i)
        d.lambda_xhat(i, i) = -std::fabs(mu_xhat[i]);
    d.gamma = Mat(mu_q_re.size(), mu_q_re.size());
    d.lambda_q.reserve(mu_q_re.size());
    for (std::size_t i = 0; i < mu_q_re.size(); ++i) {
        d.gamma(i, i) = std::fabs(mu_q_re[i]);
        d.lambda_q.emplace_back(-std::fabs(mu_q_re[i]), mu_q_im[i]);
    }
    return d;
}

YoulaPolicy::YoulaPolicy(const YoulaConfig& cfg, Mat K, CartPoleParams pp, ObstacleField obs)
    : cfg_(cfg), K_(std::move(K)), pp_(pp), obs_(obs) {
    if (cfg_.m != 1) throw DimensionError("YoulaPolicy: only single-input plants supported");
    if (K_.rows != static_cast<std::size_t>(cfg_.m) || K_.cols != static_cast<std::size_t>(cfg_.n))
        throw DimensionError("YoulaPolicy: K must be m x n");
    phi1_ = nets::MlpSpec{cfg_.n, {cfg_.init_hidden}, cfg_.n, true};
    phi2_ = nets::MlpSpec{cfg_.n, {cfg_.init_hidden}, cfg_.n_q, true};
    phi3_ = nets::MlpSpec{cfg_.n_q + cfg_.n, cfg_.readout_hidden, cfg_.m, false};

    off_mu_xhat_ = layout_template_.add_slice("mu_xhat", cfg_.n);
    off_mu_q_re_ = layout_template_.add_slice("mu_q_re", cfg_.n_q);
    off_mu_q_im_ = layout_template_.add_slice("mu_q_im", cfg_.n_q);
    off_B_q_ = layout_template_.add_slice("B_q", static_cast<std::size_t>(cfg_.n_q) * cfg_.n);
    off_phi1_ = layout_template_.add_slice("phi1", phi1_.param_count());
    off_phi2_ = layout_template_.add_slice("phi2", phi2_.param_count());
    off_nu_ = layout_template_.add_slice("nu", cfg_.n_q);
    off_phi3_ = layout_template_.add_slice("phi3", phi3_.param_count());
}

ParamStore YoulaPolicy::init_params(std::uint64_t seed) const {
    ParamStore ps = layout_template_;
    Rng rng(seed);
    // Mode magnitudes start in [0.5, 2]: fast enough that the internal
    // dynamics do not dominate the closed-loop tail behind the ~1.5 rad/s
    // linear-gain poles.
    for (double& v : ps.slice("mu_xhat")) v = rng.uniform(0.5, 2.0);
    for (double& v : ps.slice("mu_q_re")) v = rng.uniform(0.5, 2.0);
    for (double& v : ps.slice("mu_q_im")) v = rng.uniform(0.0, kPi);
    for (double& v : ps.slice("B_q")) v = 0.5 * rng.normal();
    // phi1 gets output biases away from zero so xhat0 starts visibly offset
    // from x0 and the error channel is active from epoch one; otherwise the
    // policy is born as a plain linear gain with nothing to learn. The
    // q-initializer keeps zero biases: its slow modes couple weakly to the
    // cost, so a large q0 would ring far into the tail untouched by training.
    init_mlp_weights(phi1_, ps.slice("phi1"), rng, 0.0, 0.3);
    init_mlp_weights(phi2_, ps.slice("phi2"), rng);
    for (double& v : ps.slice("nu")) v = rng.uniform(-0.5, 0.5);
    init_mlp_weights(phi3_, ps.slice("phi3"), rng, 0.5);
    return ps;
}

GenericQPolicy YoulaPolicy::as_generic(const ParamStore& params) const {
    if (static_cast<int>(params.size()) != param_count())
        throw DimensionError("as_generic: parameter count mismatch");
    const int n = cfg_.n, n_q = cfg_.n_q;
    std::vector<double> p = params.values();

    GenericQPolicy g;
    g.n = n;
    g.n_q = 2 * n_q;  // real pairs
    g.m = cfg_.m;
    g.K = K_;
    g.xhat0 = Vec(n);
    g.q0 = Vec(2 * n_q);

    auto self = *this;
    g.s = [self, p](const Vec& zeta) {
        auto w = self.weights(std::span<const double>(p));
        Vec out(zeta.size());
        for (std::size_t i = 0; i < zeta.size(); ++i) out[i] = -std::fabs(w.mu_xhat[i]) * zeta[i];
        return out;
    };
    g.f_q = [self, p, n, n_q](const Vec& q, const Vec& xhat, const Vec& x) {
        auto w = self.weights(std::span<const double>(p));
        std::vector<double> e(n);
        for (int i = 0; i < n; ++i) e[i] = x[i] - xhat[i];
        std::vector<double> Bqe = nets::dense(w.B_q, n_q, n, std::span<const double>(e));
        Vec out(2 * n_q);
        for (int i = 0; i < n_q; ++i) {
            const double a = std::fabs(w.mu_q_re[i]);
            out[i] = a * Bqe[i] - a * q[i] - w.mu_q_im[i] * q[n_q + i];
            out[n_q + i] = w.mu_q_im[i] * q[i] - a * q[n_q + i];
        }
        return out;
    };
    g.h_q = [self, p, n, n_q](const Vec& q, const Vec& xhat, const Vec& x) {
        auto w = self.weights(std::span<const double>(p));
        std::vector<double> in;
        in.reserve(n_q + n);
        for (int i = 0; i < n_q; ++i) in.push_back(q[i]);  // Re(q) only
        for (int i = 0; i < n; ++i) in.push_back(x[i] - xhat[i]);
        auto u = nets::mlp_forward(self.phi3_spec(), std::span<const double>(w.phi3),
                                   std::span<const double>(in));
        return Vec(std::move(u));
    };
    return g;
}

MlpPolicy::MlpPolicy(bool residual, Mat K, nets::MlpSpec net, CartPoleParams pp, ObstacleField obs)
    : residual_(residual), K_(std::move(K)), net_(std::move(net)), pp_(pp), obs_(obs) {
    n_ = net_.in;
    m_ = net_.out;
    if (m_ != 1) throw DimensionError("MlpPolicy: only single-input plants supported");
    if (residual_ &&
        (K_.rows != static_cast<std::size_t>(m_) || K_.cols != static_cast<std::size_t>(n_)))
        throw DimensionError("MlpPolicy: K must be m x n");
    layout_template_.add_slice("net", net_.param_count());
}

ParamStore MlpPolicy::init_params(std::uint64_t seed) const {
    ParamStore ps = layout_template_;
    Rng rng(seed);
    init_mlp_weights(net_, ps.slice("net"), rng);
    return ps;
}

LstmPolicy::LstmPolicy(bool residual, Mat K, nets::LstmSpec net, CartPoleParams pp,
                       ObstacleField obs)
    : residual_(residual), K_(std::move(K)), net_(net), pp_(pp), obs_(obs) {
    n_ = net_.in;
    m_ = net_.out;
    if (m_ != 1) throw DimensionError("LstmPolicy: only single-input plants supported");
    if (residual_ &&
        (K_.rows != static_cast<std::size_t>(m_) || K_.cols != static_cast<std::size_t>(n_)))
        throw DimensionError("LstmPolicy: K must be m x n");
    layout_template_.add_slice("lstm", net_.param_count());
}

ParamStore LstmPolicy::init_params(std::uint64_t seed) const {
    ParamStore ps = layout_template_;
    Rng rng(seed);
    init_lstm_weights(net_, ps.slice("lstm"), rng);
    return ps;
}

AnyPolicy make_policy(PolicyKind kind, const Mat& K, const CartPoleParams& pp,
                      const ObstacleField& obs, const PolicySizes& sizes) {
    switch (kind) {
        case PolicyKind::youla: {
            YoulaConfig cfg;
            cfg.n_q = sizes.n_q;
            cfg.readout_hidden = sizes.readout_hidden;
            cfg.init_hidden = sizes.init_hidden;
            return YoulaPolicy(cfg, K, pp, obs);
        }
        case PolicyKind::residual_mlp:
        case PolicyKind::pure_mlp: {
            nets::MlpSpec spec{4, sizes.baseline_hidden, 1, true};
            return MlpPolicy(kind == PolicyKind::residual_mlp, K, spec, pp, obs);
        }
        case PolicyKind::residual_lstm:
        case PolicyKind::pure_lstm: {
            nets::LstmSpec spec{4, sizes.lstm_hidden, 1};
            return LstmPolicy(kind == PolicyKind::residual_lstm, K, spec, pp, obs);
        }
    }
    throw std::invalid_argument("make_policy: bad kind");
}

ConditionsReport check_conditions(const GenericQPolicy& q, const InputAffinePlant& plant,
                                  std::uint64_t seed) {
    ConditionsReport rep;

    // i) K stabilizes the linearization
    {
        const Mat Acl = plant.A0 + plant.B0 * q.K;
        const HurwitzReport h = is_hurwitz(Acl);
        rep.i.pass = h.hurwitz;
        if (!h.hurwitz) rep.i.detail = "A + BK not Hurwitz (" + h.reason + ")";
    }

    // ii) error field s is LES at 0
    {
        const Vec s0 = q.s(Vec(q.n));
        if (s0.norm() > 1e-10) {
            rep.ii.detail = "s(0) != 0";
        } else {
            const Mat J = fd_jacobian(q.s, Vec(q.n));
            const HurwitzReport h = is_hurwitz(J);
            rep.ii.pass = h.hurwitz;
            if (!h.hurwitz) rep.ii.detail = "ds/dz at 0 not Hurwitz (" + h.reason + ")";
        }
    }

    // iii) free dynamics f_q(., 0, 0) are LES at 0
    {
        const Vec zn(q.n);
        const Vec f0 = q.f_q(Vec(q.n_q), zn, zn);
        if (f0.norm() > 1e-10) {
            rep.iii.detail = "f_q(0,0,0) != 0";
        } else {
            auto free_dyn = [&](const Vec& qs) { return q.f_q(qs, zn, zn); };
            const Mat J = fd_jacobian(free_dyn, Vec(q.n_q));
            const HurwitzReport h = is_hurwitz(J);
            rep.iii.pass = h.hurwitz;
            if (!h.hurwitz) rep.iii.detail = "df_q/dq at 0 not Hurwitz (" + h.reason + ")";
        }
    }

    // iv) f_q and h_q see (xhat, x) only through x - xhat; h_q(0,0,0) = 0
    {
        Rng rng(seed);
        const Vec zn(q.n);
        rep.iv.pass = true;
        const Vec h0 = q.h_q(Vec(q.n_q), zn, zn);
        if (h0.norm() > 1e-12) {
            rep.iv.pass = false;
            rep.iv.detail = "h_q(0,0,0) != 0";
        }
        for (int draw = 0; rep.iv.pass && draw < 100; ++draw) {
            const Vec qs = sample_unit_ball(q.n_q, rng);
            const Vec y = sample_unit_ball(q.n, rng);
            const Vec df = q.f_q(qs, y, y) - q.f_q(qs, zn, zn);
            const Vec dh = q.h_q(qs, y, y) - q.h_q(qs, zn, zn);
            if (df.norm() > 1e-10 || dh.norm() > 1e-10) {
                rep.iv.pass = false;
                rep.iv.detail = "identity violated at draw " + std::to_string(draw) +
                                " (|df|=" + std::to_string(df.norm()) +
                                ", |dh|=" + std::to_string(dh.norm()) + ")";
            }
        }
    }
    return rep;
}

}  // namespace lesctl
