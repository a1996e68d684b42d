#include "lesctl/experiment.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "lesctl/backprop.hpp"
#include "lesctl/verify.hpp"

namespace lesctl {

namespace fs = std::filesystem;

Designed design_from_config(const ExperimentConfig& cfg) {
    Designed d;
    d.plant = make_cartpole_plant(cfg.plant);
    if (cfg.lqr_q_diag.size() != 4) throw NumericalError("lqr: q_diag must have 4 entries");
    Mat Qw(4, 4);
    for (int i = 0; i < 4; ++i) Qw(i, i) = cfg.lqr_q_diag[i];
    Mat Rw(1, 1);
    Rw(0, 0) = cfg.lqr_r;
    d.lqr = lqr(d.plant.A0, d.plant.B0, Qw, Rw, cfg.verify.riccati_tol);
    return d;
}

Vec nominal_x0(const ExperimentConfig& cfg) {
    return Vec{cfg.train.init_std, cfg.train.init_std, cfg.train.init_std, cfg.train.init_std};
}

int count_obstacle_violations(const Rollout& r, const CartPoleParams& pp,
                              const ObstacleField& obs) {
    int count = 0;
    for (const auto& z : r.z) {
        const double tx = z[0] + pp.length * std::sin(z[2]);
        const double ty = pp.length * std::cos(z[2]);
        const double d1 = std::hypot(tx - obs.center1[0], ty - obs.center1[1]);
        const double d2 = std::hypot(tx - obs.center2[0], ty - obs.center2[1]);
        if (d1 < obs.radius || d2 < obs.radius) ++count;
    }
    return count;
}

namespace {

void write_summary_json(const std::string& path, const RunSummary& s,
                        const std::vector<std::pair<int, bool>>& hurwitz_checks) {
    nlohmann::json j;
    j["kind"] = policy_kind_name(s.kind);
    j["seed"] = s.seed;
    j["final_mean_cost"] = s.final_mean_cost;
    j["best_mean_cost"] = s.best_mean_cost;
    j["hurwitz_applicable"] = s.hurwitz_applicable;
    if (s.hurwitz_applicable)
        j["hurwitz_final"] = s.hurwitz_final;
    else
        j["hurwitz_final"] = "n/a";
    j["obstacle_violations"] = s.obstacle_violations;
    j["flagged_epochs"] = s.flagged_epochs;
    j["epoch_mean_cost"] = s.epoch_mean_cost;
    nlohmann::json hc = nlohmann::json::array();
    for (auto [epoch, pass] : hurwitz_checks) hc.push_back({{"epoch", epoch}, {"pass", pass}});
    j["hurwitz_checks"] = hc;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

}  // namespace

RunSummary run_training_experiment(const ExperimentConfig& cfg) {
    const Designed d = design_from_config(cfg);
    AnyPolicy pol = make_policy(cfg.policy_kind, d.lqr.K, cfg.plant, cfg.obstacles, cfg.sizes);

    fs::create_directories(cfg.output_dir);
    fs::create_directories(cfg.output_dir + "/trajectories");
    write_resolved_config_file(cfg, cfg.output_dir + "/config.resolved.toml");

    TrainResult tr = train(pol, cfg.train);

    write_curve_csv(cfg.output_dir + "/curve.csv", tr.curve);
    save_checkpoint(cfg.output_dir + "/checkpoint.json",
                    checkpoint_of(cfg.policy_kind, cfg.sizes, cfg.plant, cfg.obstacles, d.lqr.K,
                                  tr.params, cfg.train.seed, cfg.train.epochs));

    const Rollout final_traj =
        simulate(pol, tr.params, nominal_x0(cfg), cfg.train.step, cfg.train.nsteps());
    write_trajectory_csv(cfg.output_dir + "/trajectories/final_nominal.csv", final_traj,
                         cfg.plant);

    RunSummary s;
    s.dir = cfg.output_dir;
    s.kind = cfg.policy_kind;
    s.seed = cfg.train.seed;
    s.final_mean_cost = tr.curve.epochs.back().mean_cost;
    s.best_mean_cost = tr.curve.epochs.front().mean_cost;
    for (const auto& e : tr.curve.epochs) {
        s.best_mean_cost = std::min(s.best_mean_cost, e.mean_cost);
        s.epoch_mean_cost.push_back(e.mean_cost);
    }
    s.hurwitz_applicable = cfg.policy_kind == PolicyKind::youla;
    s.hurwitz_final = !tr.hurwitz_checks.empty() && tr.hurwitz_checks.back().second;
    s.obstacle_violations = count_obstacle_violations(final_traj, cfg.plant, cfg.obstacles);
    s.flagged_epochs = tr.flagged_epochs;
    write_summary_json(cfg.output_dir + "/summary.json", s, tr.hurwitz_checks);
    return s;
}

std::vector<RunSummary> run_seeds(const ExperimentConfig& cfg,
                                  const std::vector<std::uint64_t>& seeds) {
    std::vector<RunSummary> out;
    std::vector<LearningCurve> curves;
    fs::create_directories(cfg.output_dir);
    for (std::uint64_t s : seeds) {
        ExperimentConfig c = cfg;
        c.train.seed = s;
        c.output_dir = cfg.output_dir + "/seed" + std::to_string(s);
        out.push_back(run_training_experiment(c));
        LearningCurve curve;
        for (double m : out.back().epoch_mean_cost) curve.epochs.push_back({m, m, m, 0.0, false});
        curves.push_back(std::move(curve));
    }
    write_envelope_csv(cfg.output_dir + "/envelope.csv", curves);
    return out;
}

RunSummary load_summary(const std::string& dir) {
    const std::string path = dir + "/summary.json";
    std::ifstream in(path);
    if (!in) throw std::runtime_error("missing artifact: " + path);
    nlohmann::json j;
    in >> j;
    RunSummary s;
    s.dir = dir;
    s.kind = parse_policy_kind(j.at("kind"));
    s.seed = j.at("seed");
    s.final_mean_cost = j.at("final_mean_cost");
    s.best_mean_cost = j.at("best_mean_cost");
    s.hurwitz_applicable = j.at("hurwitz_applicable");
    s.hurwitz_final = s.hurwitz_applicable && j.at("hurwitz_final").is_boolean() &&
                      j.at("hurwitz_final").get<bool>();
    s.obstacle_violations = j.at("obstacle_violations");
    s.flagged_epochs = j.at("flagged_epochs");
    s.epoch_mean_cost = j.at("epoch_mean_cost").get<std::vector<double>>();
    return s;
}

}  // namespace lesctl
