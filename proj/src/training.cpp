#include "lesctl/training.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

#include "lesctl/backprop.hpp"
#include "lesctl/lincontrol.hpp"
#include "lesctl/verify.hpp"

namespace lesctl {

int TrainConfig::nsteps() const {
    if (!(step > 0.0) || !(horizon > 0.0)) throw NumericalError("train: T and h must be positive");
    const double ratio = horizon / step;
    const int n = static_cast<int>(std::llround(ratio));
    if (n < 1 || std::fabs(ratio - n) > 1e-9 * ratio)
        throw NumericalError("train: horizon must be an integer multiple of step");
    return n;
}

std::vector<Vec> sample_init(int batch, double sigma, Rng& rng) {
    if (!(sigma > 0.0)) throw NumericalError("sample_init: sigma must be positive");
    std::vector<Vec> out;
    out.reserve(batch);
    for (int b = 0; b < batch; ++b) {
        Vec x(4);
        for (int i = 0; i < 4; ++i) x[i] = sigma * rng.normal();
        out.push_back(std::move(x));
    }
    return out;
}

double truncated_cost(const Rollout& r) { return r.total_cost; }

bool adam_step(std::vector<double>& params, std::span<const double> grad, AdamState& state,
               double lr, double beta1, double beta2, double eps) {
    if (params.size() != grad.size()) throw DimensionError("adam_step: size mismatch");
    if (!all_finite(grad)) return false;
    if (state.m.empty()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    state.t += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grad[i];
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grad[i] * grad[i];
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
    return true;
}

namespace {

/// One epoch's rollout-and-backprop over the batch; per-trajectory results
/// land in fixed slots so the later reduction order is independent of
/// scheduling.
void run_batch(const AnyPolicy& pol, const ParamStore& params, const std::vector<Vec>& x0s,
               double h, int nsteps, int threads, std::vector<double>& costs,
               std::vector<std::vector<double>>& grads, std::vector<bool>& ok) {
    const int batch = static_cast<int>(x0s.size());
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= batch) return;
            try {
                costs[i] = rollout_cost_grad(pol, params, x0s[i], h, nsteps,
                                             std::span<double>(grads[i]));
                ok[i] = std::isfinite(costs[i]) && all_finite(grads[i]);
            } catch (const std::exception&) {
                ok[i] = false;
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
}

}  // namespace

TrainResult train(const AnyPolicy& pol, const TrainConfig& cfg,
                  const std::function<void(int, const EpochStats&)>& on_epoch) {
    const int nsteps = cfg.nsteps();
    if (cfg.batch < 1) throw NumericalError("train: batch must be >= 1");
    if (!(cfg.lr >= 0.0)) throw NumericalError("train: lr must be >= 0");
    int threads = cfg.threads > 0 ? cfg.threads
                                  : static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;

    TrainResult res;
    res.params = policy_init_params(pol, cfg.seed);
    ParamStore last_finite = res.params;
    AdamState adam;

    const std::size_t d = res.params.size();
    std::vector<double> costs(cfg.batch);
    std::vector<std::vector<double>> grads(cfg.batch, std::vector<double>(d));
    std::vector<bool> ok(cfg.batch);
    std::vector<double> mean_grad(d);

    auto hurwitz_spot_check = [&](int epoch) {
        if (!std::holds_alternative<YoulaPolicy>(pol)) return;
        bool pass = false;
        try {
            const auto J = policy_closed_loop_jacobian(pol, res.params);
            pass = J && is_hurwitz(*J).hurwitz;
        } catch (const std::exception&) {
            pass = false;
        }
        res.hurwitz_checks.emplace_back(epoch, pass);
    };

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto tic = std::chrono::steady_clock::now();
        Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
        const std::vector<Vec> x0s = sample_init(cfg.batch, cfg.init_std, rng);

        run_batch(pol, res.params, x0s, cfg.step, nsteps, threads, costs, grads, ok);

        EpochStats st;
        int n_ok = 0;
        for (int i = 0; i < cfg.batch; ++i) {
            if (!ok[i]) continue;
            if (n_ok == 0) {
                st.min_cost = st.max_cost = costs[i];
            } else {
                st.min_cost = std::min(st.min_cost, costs[i]);
                st.max_cost = std::max(st.max_cost, costs[i]);
            }
            st.mean_cost += costs[i];
            ++n_ok;
        }
        if (n_ok > 0) st.mean_cost /= n_ok;

        if (n_ok < cfg.batch) {
            // Non-finite rollout: revert to the last finite parameters and
            // keep going (baselines may destabilize).
            st.flagged = true;
            res.flagged_epochs += 1;
            res.params = last_finite;
        } else {
            std::fill(mean_grad.begin(), mean_grad.end(), 0.0);
            for (int i = 0; i < cfg.batch; ++i)
                for (std::size_t j = 0; j < d; ++j) mean_grad[j] += grads[i][j];
            for (std::size_t j = 0; j < d; ++j) mean_grad[j] /= cfg.batch;

            last_finite = res.params;
            if (!adam_step(res.params.values(), mean_grad, adam, cfg.lr, cfg.adam_beta1,
                           cfg.adam_beta2, cfg.adam_eps)) {
                st.flagged = true;
                res.flagged_epochs += 1;
            }
        }

        st.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - tic).count();
        res.curve.epochs.push_back(st);
        if (on_epoch) on_epoch(epoch, st);

        const int cadence = cfg.hurwitz_check_every > 0 ? cfg.hurwitz_check_every : cfg.epochs + 1;
        if (epoch == 1 || epoch % cadence == 0 || epoch == cfg.epochs) hurwitz_spot_check(epoch);
    }
    return res;
}

}  // namespace lesctl
