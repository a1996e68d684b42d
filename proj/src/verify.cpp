#include "lesctl/verify.hpp"

#include <algorithm>
#include <cmath>

#include "lesctl/lincontrol.hpp"

namespace lesctl {

Mat closed_loop_jacobian(const std::function<Vec(const Vec&)>& field, int dim, double fd_step) {
    const Vec f0 = field(Vec(dim));
    if (f0.norm() > 1e-10) throw NumericalError("closed_loop_jacobian: not an equilibrium");
    return fd_jacobian(field, Vec(dim), fd_step);
}

std::optional<Mat> policy_closed_loop_jacobian(const AnyPolicy& pol, const ParamStore& params) {
    const std::vector<double>& p = params.values();
    std::span<const double> ps(p);

    auto strip_cost_field = [&](const auto& concrete) {
        const int dim = concrete.aug_dim() - 1;
        auto field = [&concrete, ps, dim](const Vec& v) {
            std::vector<double> z(v.data);
            z.push_back(0.0);  // cost channel does not feed back
            std::vector<double> dz = concrete.field(ps, z);
            dz.resize(dim);
            return Vec(std::move(dz));
        };
        return closed_loop_jacobian(field, dim);
    };

    if (const auto* y = std::get_if<YoulaPolicy>(&pol)) return strip_cost_field(*y);
    if (const auto* m = std::get_if<MlpPolicy>(&pol)) return strip_cost_field(*m);
    return std::nullopt;
}

DecayFit fit_decay(std::span<const double> ts, std::span<const double> norms, double t_start,
                   double t_end) {
    if (ts.size() != norms.size() || ts.empty())
        throw DimensionError("fit_decay: time/norm size mismatch");
    if (!(t_start < t_end)) throw NumericalError("fit_decay: empty window");

    std::vector<double> tw, lw;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (ts[i] < t_start || ts[i] > t_end) continue;
        if (!(norms[i] > 0.0))
            throw NumericalError("fit_decay: nonpositive norm in window at t=" +
                                 std::to_string(ts[i]));
        tw.push_back(ts[i]);
        lw.push_back(std::log(norms[i]));
    }
    if (tw.size() < 2) throw NumericalError("fit_decay: fewer than two samples in window");

    const double n = static_cast<double>(tw.size());
    double st = 0, sl = 0, stt = 0, stl = 0;
    for (std::size_t i = 0; i < tw.size(); ++i) {
        st += tw[i];
        sl += lw[i];
        stt += tw[i] * tw[i];
        stl += tw[i] * lw[i];
    }
    const double denom = n * stt - st * st;
    const double slope = (n * stl - st * sl) / denom;
    const double intercept = (sl - slope * st) / n;

    DecayFit fit;
    fit.lambda = -slope;
    fit.t_start = t_start;
    fit.t_end = t_end;
    fit.x0_norm = norms[0];
    fit.k = std::exp(intercept) / norms[0];
    double sse = 0;
    for (std::size_t i = 0; i < tw.size(); ++i) {
        const double r = lw[i] - (intercept + slope * tw[i]);
        sse += r * r;
    }
    fit.rmse = std::sqrt(sse / n);
    return fit;
}

namespace {
double vec_norm(std::span<const double> xs) {
    double s = 0;
    for (double x : xs) s += x * x;
    return std::sqrt(s);
}
}  // namespace

TailReport tail_bound_check(const Rollout& r, int state_dim, double p, double M, double T_cut) {
    TailReport rep;
    const std::size_t npts = r.t.size();
    std::vector<double> xn(npts), un(npts);
    for (std::size_t i = 0; i < npts; ++i) {
        xn[i] = vec_norm(std::span<const double>(r.z[i].data(), state_dim));
        un[i] = vec_norm(r.u[i]);
    }
    const double T_end = r.t.back();
    if (!(T_cut < T_end)) throw NumericalError("tail_bound_check: T_cut beyond trajectory end");

    // Identically-zero channels need no fit: their envelope constant is 0.
    const double x_max = *std::max_element(xn.begin(), xn.end());
    const double u_max = *std::max_element(un.begin(), un.end());
    double gamma = std::numeric_limits<double>::infinity();
    if (x_max > 0.0) gamma = fit_decay(r.t, xn, T_cut, T_end).lambda;
    if (u_max > 0.0) gamma = std::min(gamma, fit_decay(r.t, un, T_cut, T_end).lambda);
    if (!std::isfinite(gamma)) gamma = 1.0;  // both channels zero; bound is 0 anyway
    if (!(gamma > 0.0)) throw NumericalError("tail_bound_check: fitted decay rate not positive");
    rep.gamma = gamma;

    // Envelope constants that make |x(t)| <= A e^{-gamma t} hold pointwise on
    // the tail (the fitted line alone can undercut peaks).
    double A = 0.0, B = 0.0;
    rep.pointwise_ok = true;
    std::size_t i_cut = 0;
    for (std::size_t i = 0; i < npts; ++i) {
        if (r.t[i] < T_cut) continue;
        if (i_cut == 0 && r.t[i] >= T_cut) i_cut = i;
        A = std::max(A, xn[i] * std::exp(gamma * r.t[i]));
        B = std::max(B, un[i] * std::exp(gamma * r.t[i]));
        const double cap = M * (std::pow(xn[i], p) + std::pow(un[i], p));
        if (r.stage_cost[i] > cap * (1.0 + 1e-12) + 1e-300) rep.pointwise_ok = false;
    }
    rep.A = A;
    rep.B = B;
    rep.bound = M * (std::pow(A, p) + std::pow(B, p)) / (p * gamma) * std::exp(-p * gamma * T_cut);

    // Accumulated cost over [T_cut, T_end] from the running-cost channel.
    rep.actual = r.z.back().back() - r.z[i_cut].back();
    rep.pass = rep.pointwise_ok && rep.actual <= rep.bound * (1.0 + 1e-9);
    return rep;
}

}  // namespace lesctl
