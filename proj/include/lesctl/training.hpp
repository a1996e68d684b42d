#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lesctl/linalg.hpp"
#include "lesctl/policy.hpp"
#include "lesctl/rng.hpp"

namespace lesctl {

struct TrainConfig {
    double horizon = 4.0;   // T (s); must be an integer multiple of step
    double step = 0.01;     // h (s)
    int batch = 16;
    int epochs = 100;
    double lr = 5e-3;
    double init_std = 0.05;  // sigma_0 per state coordinate
    std::uint64_t seed = 0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    int hurwitz_check_every = 10;  // Youla structural spot-check cadence
    int threads = 0;               // 0 = hardware concurrency

    int nsteps() const;  // horizon / step, validated
};

struct EpochStats {
    double mean_cost = 0.0;
    double min_cost = 0.0;
    double max_cost = 0.0;
    double wall_s = 0.0;
    bool flagged = false;  // non-finite rollout or gradient this epoch
};

struct LearningCurve {
    std::vector<EpochStats> epochs;
};

/// i.i.d. N(0, sigma^2 I_4) initial states; throws on sigma <= 0.
std::vector<Vec> sample_init(int batch, double sigma, Rng& rng);

/// The truncated cost J_T is the running-cost accumulator at t = T.
double truncated_cost(const Rollout& r);

struct AdamState {
    std::vector<double> m, v;
    long t = 0;
};

/// Bias-corrected Adam update in place. Returns false (no update) when the
/// gradient contains non-finite entries.
bool adam_step(std::vector<double>& params, std::span<const double> grad, AdamState& state,
               double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

struct TrainResult {
    ParamStore params;
    LearningCurve curve;
    std::vector<std::pair<int, bool>> hurwitz_checks;  // (epoch, pass), Youla only
    int flagged_epochs = 0;
};

/// Batched policy-gradient loop: sample initial states, roll out the closed
/// loop, backpropagate the truncated cost, and apply Adam. Non-finite
/// epochs roll parameters back to the last finite state and continue.
TrainResult train(const AnyPolicy& pol, const TrainConfig& cfg,
                  const std::function<void(int, const EpochStats&)>& on_epoch = {});

}  // namespace lesctl
