#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "lesctl/plant.hpp"
#include "lesctl/policy.hpp"
#include "lesctl/training.hpp"

namespace lesctl {

class ConfigError : public std::runtime_error {
public:
    ConfigError(int line, const std::string& msg)
        : std::runtime_error("config line " + std::to_string(line) + ": " + msg), line_(line) {}
    int line() const { return line_; }

private:
    int line_ = 0;
};

struct VerifyOptions {
    int draws = 100;
    double eval_horizon = 10.0;       // horizon for post-training evaluation rollouts
    double decay_window_frac = 0.5;   // decay fit window = [frac*T, T]
    double lyapunov_tol = 1e-10;
    double riccati_tol = 1e-8;
};

/// Full experiment description; every field has a default, and a parsed file
/// may override any subset. Unknown sections or keys are rejected.
struct ExperimentConfig {
    CartPoleParams plant;
    ObstacleField obstacles;
    std::vector<double> lqr_q_diag{10.0, 1.0, 100.0, 1.0};
    double lqr_r = 0.1;
    PolicyKind policy_kind = PolicyKind::youla;
    PolicySizes sizes;
    TrainConfig train;
    VerifyOptions verify;
    std::string output_dir = "runs/exp";
};

/// Parses a flat key-value config file ([section] headers, `key = value`
/// lines, numbers/strings/bools/number arrays). Throws ConfigError with the
/// offending line number.
ExperimentConfig load_config(const std::string& path);

/// Applies the single supported environment override (RUN_DIR).
void apply_env_overrides(ExperimentConfig& cfg);

/// Echoes the fully resolved configuration in the same file format.
void write_resolved_config(const ExperimentConfig& cfg, std::ostream& os);
void write_resolved_config_file(const ExperimentConfig& cfg, const std::string& path);

}  // namespace lesctl
