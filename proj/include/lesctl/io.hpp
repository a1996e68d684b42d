#pragma once

#include <string>
#include <vector>

#include "lesctl/ode.hpp"
#include "lesctl/policy.hpp"
#include "lesctl/training.hpp"

namespace lesctl {

/// CSV schema: t,p,pdot,theta,thetadot,u,tip_x,tip_y,stage_cost
void write_trajectory_csv(const std::string& path, const Rollout& r, const CartPoleParams& pp);

/// CSV schema: epoch,mean_cost,min_cost,max_cost
void write_curve_csv(const std::string& path, const LearningCurve& curve);

/// Per-epoch mean/min/max across seeds of the per-seed mean costs.
/// CSV schema: epoch,mean_cost,min_cost,max_cost
void write_envelope_csv(const std::string& path, const std::vector<LearningCurve>& curves);

struct Checkpoint {
    PolicyKind kind = PolicyKind::youla;
    PolicySizes sizes;
    CartPoleParams plant;
    ObstacleField obstacles;
    Mat K;  // m x n
    std::vector<std::pair<std::string, std::vector<double>>> slices;
    std::uint64_t seed = 0;
    int epochs_trained = 0;

    /// Rebuilds the policy object this checkpoint describes.
    AnyPolicy make_policy_object() const;
    /// Parameter store matching the policy layout, filled from the slices.
    ParamStore make_params() const;
};

Checkpoint checkpoint_of(PolicyKind kind, const PolicySizes& sizes, const CartPoleParams& plant,
                         const ObstacleField& obstacles, const Mat& K, const ParamStore& params,
                         std::uint64_t seed, int epochs_trained);

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace lesctl
