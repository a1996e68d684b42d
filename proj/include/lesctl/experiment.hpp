#pragma once

#include <string>
#include <vector>

#include "lesctl/config.hpp"
#include "lesctl/io.hpp"
#include "lesctl/lincontrol.hpp"
#include "lesctl/plant.hpp"
#include "lesctl/policy.hpp"
#include "lesctl/training.hpp"

namespace lesctl {

struct Designed {
    InputAffinePlant plant;
    LqrResult lqr;
};

/// Plant construction plus LQR synthesis with the configured weights.
Designed design_from_config(const ExperimentConfig& cfg);

struct RunSummary {
    std::string dir;
    PolicyKind kind = PolicyKind::youla;
    std::uint64_t seed = 0;
    double final_mean_cost = 0.0;
    double best_mean_cost = 0.0;
    bool hurwitz_applicable = false;  // structural guarantee only for the Youla class
    bool hurwitz_final = false;
    int obstacle_violations = 0;  // grid points of the final nominal trajectory with d_i < R
    int flagged_epochs = 0;
    std::vector<double> epoch_mean_cost;
};

/// Trains one seed and writes the run directory (curve.csv, checkpoint.json,
/// config.resolved.toml, trajectories/, summary.json).
RunSummary run_training_experiment(const ExperimentConfig& cfg);

/// Trains each seed into <output_dir>/seed<k>/ and writes the cross-seed
/// envelope.csv in <output_dir>.
std::vector<RunSummary> run_seeds(const ExperimentConfig& cfg,
                                  const std::vector<std::uint64_t>& seeds);

/// Reads back the summary.json of a finished run directory.
RunSummary load_summary(const std::string& dir);

/// Exact (unsmoothed) tip-to-center distances below R counted over the grid.
int count_obstacle_violations(const Rollout& r, const CartPoleParams& pp,
                              const ObstacleField& obs);

/// The nominal evaluation initial state: init_std on every coordinate.
Vec nominal_x0(const ExperimentConfig& cfg);

}  // namespace lesctl
