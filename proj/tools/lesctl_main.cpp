// Command-line front end: LQR synthesis, policy training, evaluation,
// stability verification, and run comparison for the cart-pendulum
// control-learning experiments.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "lesctl/backprop.hpp"
#include "lesctl/config.hpp"
#include "lesctl/experiment.hpp"
#include "lesctl/io.hpp"
#include "lesctl/lincontrol.hpp"
#include "lesctl/necessity.hpp"
#include "lesctl/training.hpp"
#include "lesctl/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;

json mat_json(const lesctl::Mat& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows; ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.cols; ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

lesctl::ExperimentConfig config_from(const std::string& path) {
    lesctl::ExperimentConfig cfg = path.empty() ? lesctl::ExperimentConfig{}
                                                : lesctl::load_config(path);
    lesctl::apply_env_overrides(cfg);
    return cfg;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) seeds.push_back(std::stoull(item));
    }
    if (seeds.empty()) throw CLI::ValidationError("--seeds", "empty seed list");
    return seeds;
}

lesctl::Vec parse_x0(const std::string& s) {
    lesctl::Vec x0;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) x0.data.push_back(std::stod(item));
    if (x0.size() != 4) throw CLI::ValidationError("--x0", "expected 4 comma-separated values");
    return x0;
}

int cmd_lqr(const std::string& config_path) {
    const lesctl::ExperimentConfig cfg = config_from(config_path);
    const lesctl::Designed d = lesctl::design_from_config(cfg);
    json out;
    out["K"] = mat_json(d.lqr.K);
    out["P"] = mat_json(d.lqr.P);
    out["care_residual"] = d.lqr.residual;
    out["iterations"] = d.lqr.iterations;
    out["hurwitz"] = lesctl::is_hurwitz(d.plant.A0 + d.plant.B0 * d.lqr.K).hurwitz;
    std::cout << out.dump(2) << "\n";
    return kExitOk;
}

int cmd_train(const std::string& config_path, const std::string& policy_override,
              std::int64_t seed_override, std::int64_t epochs_override,
              const std::string& seeds_csv, const std::string& out_override) {
    lesctl::ExperimentConfig cfg = config_from(config_path);
    if (!policy_override.empty()) cfg.policy_kind = lesctl::parse_policy_kind(policy_override);
    if (seed_override >= 0) cfg.train.seed = static_cast<std::uint64_t>(seed_override);
    if (epochs_override > 0) cfg.train.epochs = static_cast<int>(epochs_override);
    if (!out_override.empty()) cfg.output_dir = out_override;

    if (!seeds_csv.empty()) {
        const auto seeds = parse_seed_list(seeds_csv);
        const auto summaries = lesctl::run_seeds(cfg, seeds);
        json out = json::array();
        for (const auto& s : summaries)
            out.push_back({{"dir", s.dir},
                           {"seed", s.seed},
                           {"final_mean_cost", s.final_mean_cost},
                           {"flagged_epochs", s.flagged_epochs}});
        std::cout << out.dump(2) << "\n";
        return kExitOk;
    }

    const lesctl::RunSummary s = lesctl::run_training_experiment(cfg);
    json out{{"dir", s.dir},
             {"kind", lesctl::policy_kind_name(s.kind)},
             {"seed", s.seed},
             {"final_mean_cost", s.final_mean_cost},
             {"best_mean_cost", s.best_mean_cost},
             {"obstacle_violations", s.obstacle_violations},
             {"flagged_epochs", s.flagged_epochs}};
    std::cout << out.dump(2) << "\n";
    return kExitOk;
}

int cmd_eval(const std::string& ck_path, const std::string& x0_csv, double horizon, double step,
             const std::string& out_csv) {
    const lesctl::Checkpoint ck = lesctl::load_checkpoint(ck_path);
    const lesctl::AnyPolicy pol = ck.make_policy_object();
    const lesctl::ParamStore params = ck.make_params();
    const lesctl::Vec x0 = parse_x0(x0_csv);
    const int nsteps = static_cast<int>(std::llround(horizon / step));
    const lesctl::Rollout r = lesctl::simulate(pol, params, x0, step, nsteps);
    if (!out_csv.empty()) lesctl::write_trajectory_csv(out_csv, r, ck.plant);
    const auto& zb = r.z.back();
    json out{{"J_T", r.total_cost},
             {"final_state_norm",
              std::sqrt(zb[0] * zb[0] + zb[1] * zb[1] + zb[2] * zb[2] + zb[3] * zb[3])},
             {"steps", nsteps}};
    std::cout << out.dump(2) << "\n";
    return kExitOk;
}

int cmd_verify_les(const std::string& ck_path, int draws, double horizon, double window_frac) {
    const lesctl::Checkpoint ck = lesctl::load_checkpoint(ck_path);
    const lesctl::AnyPolicy pol = ck.make_policy_object();
    const lesctl::ParamStore params = ck.make_params();

    json out;

    // Baselines with biased nets do not fix the origin, so the structural
    // certificate may be inapplicable rather than failed.
    auto jacobian_hurwitz = [&](const lesctl::ParamStore& ps) -> std::optional<bool> {
        try {
            const auto J = lesctl::policy_closed_loop_jacobian(pol, ps);
            if (!J) return std::nullopt;
            return lesctl::is_hurwitz(*J).hurwitz;
        } catch (const lesctl::NumericalError&) {
            return std::nullopt;
        }
    };

    const auto ck_verdict = jacobian_hurwitz(params);
    if (ck_verdict)
        out["checkpoint_hurwitz"] = *ck_verdict;
    else
        out["checkpoint_hurwitz"] = "n/a";

    int pass = 0, applicable = 0;
    for (int i = 0; i < draws; ++i) {
        const auto v = jacobian_hurwitz(lesctl::policy_init_params(pol, 1000 + i));
        if (!v) continue;
        ++applicable;
        if (*v) ++pass;
    }
    out["draws"] = draws;
    out["hurwitz_pass_rate"] = applicable > 0 ? static_cast<double>(pass) / applicable : 0.0;

    // Decay fit from |x0| = 0.05 plus the truncated-cost tail bound with the
    // quadratic stage cost (obstacle weight off, p = 2, M = gamma_1).
    const double step = 0.01;
    const int nsteps = static_cast<int>(std::llround(horizon / step));
    lesctl::Vec x0(4, 0.025);  // |x0| = 0.05
    const lesctl::Rollout r = lesctl::simulate(pol, params, x0, step, nsteps);
    std::vector<double> norms(r.t.size());
    for (std::size_t i = 0; i < r.t.size(); ++i) {
        const auto& z = r.z[i];
        norms[i] = std::sqrt(z[0] * z[0] + z[1] * z[1] + z[2] * z[2] + z[3] * z[3]);
    }
    const lesctl::DecayFit fit = lesctl::fit_decay(r.t, norms, window_frac * horizon, horizon);
    out["decay_fits"] = nlohmann::json::array({{{"lambda", fit.lambda},
                        {"k", fit.k},
                        {"rmse", fit.rmse},
                        {"window", {fit.t_start, fit.t_end}},
                        {"final_state_norm", norms.back()}}});

    lesctl::Checkpoint quad = ck;
    quad.obstacles.gamma_obstacle = 0.0;
    const lesctl::AnyPolicy pol_quad = quad.make_policy_object();
    const lesctl::Rollout rq = lesctl::simulate(pol_quad, params, x0, step, nsteps);
    const lesctl::TailReport tail =
        lesctl::tail_bound_check(rq, 4, 2.0, quad.obstacles.gamma_state, window_frac * horizon);
    out["tail_checks"] = nlohmann::json::array({{{"bound", tail.bound},
                         {"actual", tail.actual},
                         {"gamma", tail.gamma},
                         {"pointwise_ok", tail.pointwise_ok},
                         {"pass", tail.pass}}});

    std::cout << out.dump(2) << "\n";
    return kExitOk;
}

int cmd_verify_necessity(const std::string& config_path) {
    const lesctl::ExperimentConfig cfg = config_from(config_path);
    const lesctl::Designed d = lesctl::design_from_config(cfg);
    const lesctl::Mat K = d.lqr.K;

    lesctl::GenericCController stat;
    stat.n_c = 0;
    stat.n = 4;
    stat.m = 1;
    stat.xc0 = lesctl::Vec(0);
    stat.f_c = [](const lesctl::Vec&, const lesctl::Vec&) { return lesctl::Vec(0); };
    stat.h_c = [K](const lesctl::Vec&, const lesctl::Vec& x) { return K * x; };

    lesctl::GenericCController dyn;
    dyn.n_c = 2;
    dyn.n = 4;
    dyn.m = 1;
    dyn.xc0 = lesctl::Vec(2);
    const lesctl::Mat Ac(2, 2, {-5.0, 0.0, 0.0, -8.0});
    const lesctl::Mat Bc(2, 4, {0.5, -0.2, 0.3, 0.1, -0.4, 0.2, 0.6, -0.3});
    const lesctl::Mat Cc(1, 2, {0.7, -0.5});
    dyn.f_c = [Ac, Bc](const lesctl::Vec& xc, const lesctl::Vec& x) {
        return (Ac * xc) + (Bc * x);
    };
    dyn.h_c = [K, Cc](const lesctl::Vec& xc, const lesctl::Vec& x) {
        lesctl::Vec u = K * x;
        const lesctl::Vec cc = Cc * xc;
        for (std::size_t i = 0; i < u.size(); ++i) u[i] += 0.1 * cc[i];
        return u;
    };

    json out;
    lesctl::Rng rng(7);
    const std::pair<std::string, const lesctl::GenericCController*> cases[] = {
        {"static_lqr", &stat}, {"dynamic_2state", &dyn}};
    for (const auto& [name, ctrl] : cases) {
        const lesctl::NecessityTransform tr =
            lesctl::necessity_transform(*ctrl, d.plant, K, lesctl::default_error_field());
        const lesctl::ConditionsReport rep = lesctl::check_conditions(tr.result, d.plant);
        double worst_u = 0.0, worst_d = 0.0;
        for (int draw = 0; draw < 20; ++draw) {
            lesctl::Vec x0(4);
            for (int i = 0; i < 4; ++i) x0[i] = rng.normal();
            const double nrm = x0.norm();
            for (int i = 0; i < 4; ++i) x0[i] *= 0.05 / nrm;
            const lesctl::EquivalenceReport eq =
                lesctl::equivalence_check(*ctrl, tr.result, d.plant, x0, 5.0, 0.01);
            worst_u = std::max(worst_u, eq.max_u_dev);
            worst_d = std::max(worst_d, eq.max_d);
        }
        out[name] = {{"n_q", tr.result.n_q},
                     {"conditions",
                      {{"i", rep.i.pass},
                       {"ii", rep.ii.pass},
                       {"iii", rep.iii.pass},
                       {"iv", rep.iv.pass}}},
                     {"max_input_deviation", worst_u},
                     {"max_observer_drift", worst_d},
                     {"trajectories_equivalent", worst_u <= 1e-8}};
    }
    std::cout << out.dump(2) << "\n";
    return kExitOk;
}

int cmd_compare(const std::vector<std::string>& dirs, const std::string& merged_csv) {
    std::vector<lesctl::RunSummary> rows;
    for (const auto& dir : dirs) rows.push_back(lesctl::load_summary(dir));

    std::cout << "kind            final_cost    best_cost     hurwitz  obstacle_violations\n";
    for (const auto& s : rows) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%-15s %-13.6g %-13.6g %-8s %d\n",
                      lesctl::policy_kind_name(s.kind).c_str(), s.final_mean_cost,
                      s.best_mean_cost,
                      s.hurwitz_applicable ? (s.hurwitz_final ? "true" : "false") : "n/a",
                      s.obstacle_violations);
        std::cout << buf;
    }

    if (!merged_csv.empty()) {
        std::ofstream out(merged_csv);
        if (!out) throw std::runtime_error("cannot write " + merged_csv);
        out.precision(17);
        out << "epoch";
        for (const auto& s : rows) out << ',' << lesctl::policy_kind_name(s.kind) << "_mean_cost";
        out << '\n';
        std::size_t max_epochs = 0;
        for (const auto& s : rows) max_epochs = std::max(max_epochs, s.epoch_mean_cost.size());
        for (std::size_t e = 0; e < max_epochs; ++e) {
            out << (e + 1);
            for (const auto& s : rows) {
                out << ',';
                if (e < s.epoch_mean_cost.size()) out << s.epoch_mean_cost[e];
            }
            out << '\n';
        }
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Learning locally exponentially stabilizing policies for the cart-pendulum"};
    app.require_subcommand(1);

    std::string config_path, policy_override, seeds_csv, out_override;
    std::int64_t seed_override = -1, epochs_override = -1;
    std::string ck_path, x0_csv = "0.05,0.05,0.05,0.05", out_csv;
    double horizon = 10.0, step = 0.01, window_frac = 0.5;
    int draws = 100;
    std::vector<std::string> compare_dirs;
    std::string merged_csv;

    auto* lqr_cmd = app.add_subcommand("lqr", "Design the LQR gain and print K, P as JSON");
    lqr_cmd->add_option("--config", config_path, "experiment config file");

    auto* train_cmd = app.add_subcommand("train", "Train a policy and write the run directory");
    train_cmd->add_option("--config", config_path, "experiment config file");
    train_cmd->add_option("--policy", policy_override,
                          "youla|residual_mlp|pure_mlp|residual_lstm|pure_lstm");
    train_cmd->add_option("--seed", seed_override, "training seed");
    train_cmd->add_option("--epochs", epochs_override, "number of epochs");
    train_cmd->add_option("--seeds", seeds_csv, "comma-separated seed list (multi-seed envelope)");
    train_cmd->add_option("--out", out_override, "output directory");

    auto* eval_cmd = app.add_subcommand("eval", "Roll out a checkpoint and report J_T");
    eval_cmd->add_option("--checkpoint", ck_path, "checkpoint.json")->required();
    eval_cmd->add_option("--x0", x0_csv, "initial state, comma-separated");
    eval_cmd->add_option("--horizon", horizon, "rollout horizon (s)");
    eval_cmd->add_option("--step", step, "integration step (s)");
    eval_cmd->add_option("--out", out_csv, "trajectory CSV path");

    auto* verify_cmd = app.add_subcommand("verify", "Stability verification");
    verify_cmd->require_subcommand(1);
    auto* les_cmd = verify_cmd->add_subcommand("les", "Closed-loop LES certification");
    les_cmd->add_option("--checkpoint", ck_path, "checkpoint.json")->required();
    les_cmd->add_option("--draws", draws, "random parameter draws");
    les_cmd->add_option("--horizon", horizon, "evaluation horizon (s)");
    les_cmd->add_option("--window-frac", window_frac, "decay-fit window start fraction");
    auto* nec_cmd = verify_cmd->add_subcommand("necessity", "Controller-to-Q-policy equivalence");
    nec_cmd->add_option("--config", config_path, "experiment config file");

    auto* compare_cmd = app.add_subcommand("compare", "Summarize finished run directories");
    compare_cmd->add_option("dirs", compare_dirs, "run directories")->required();
    compare_cmd->add_option("--out", merged_csv, "merged per-epoch CSV");

    try {
        app.parse(argc, argv);
        if (lqr_cmd->parsed()) return cmd_lqr(config_path);
        if (train_cmd->parsed())
            return cmd_train(config_path, policy_override, seed_override, epochs_override,
                             seeds_csv, out_override);
        if (eval_cmd->parsed()) return cmd_eval(ck_path, x0_csv, horizon, step, out_csv);
        if (verify_cmd->parsed()) {
            if (les_cmd->parsed()) return cmd_verify_les(ck_path, draws, horizon, window_frac);
            return cmd_verify_necessity(config_path);
        }
        if (compare_cmd->parsed()) return cmd_compare(compare_dirs, merged_csv);
        return kExitUsage;
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    } catch (const lesctl::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const lesctl::NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const lesctl::OdeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const lesctl::ad::NonFiniteError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}
