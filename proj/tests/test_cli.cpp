#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lesctl/backprop.hpp"
#include "lesctl/config.hpp"
#include "lesctl/experiment.hpp"
#include "lesctl/io.hpp"

using namespace lesctl;
namespace fs = std::filesystem;

namespace {

struct CmdResult {
    int exit_code = -1;
    std::string output;
};

CmdResult run_cli(const std::string& args) {
    const std::string cmd = std::string(LESCTL_BIN) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CmdResult r;
    std::array<char, 4096> buf{};
    while (fgets(buf.data(), buf.size(), pipe)) r.output += buf.data();
    const int status = pclose(pipe);
    r.exit_code = WEXITSTATUS(status);
    return r;
}

std::string write_temp(const std::string& name, const std::string& content) {
    const fs::path p = fs::temp_directory_path() / name;
    std::ofstream out(p);
    out << content;
    return p.string();
}

}  // namespace

TEST_CASE("config: defaults round-trip through the resolved echo") {
    ExperimentConfig cfg;
    cfg.train.seed = 17;
    cfg.policy_kind = PolicyKind::residual_lstm;
    cfg.obstacles.center2 = {0.4, 0.8};
    std::stringstream ss;
    write_resolved_config(cfg, ss);
    const std::string path = write_temp("lesctl_roundtrip.toml", ss.str());
    const ExperimentConfig back = load_config(path);
    CHECK(back.train.seed == 17);
    CHECK(back.policy_kind == PolicyKind::residual_lstm);
    CHECK(back.obstacles.center2[0] == 0.4);
    CHECK(back.plant.gravity == cfg.plant.gravity);
    CHECK(back.lqr_q_diag == cfg.lqr_q_diag);
}

TEST_CASE("config: unknown keys and malformed lines are rejected with line numbers") {
    const std::string bad_key = write_temp("lesctl_badkey.toml", "[plant]\ncart_mass = 1.0\nwheel_count = 4\n");
    try {
        load_config(bad_key);
        CHECK(false);
    } catch (const ConfigError& e) {
        CHECK(e.line() == 3);
        CHECK(std::string(e.what()).find("wheel_count") != std::string::npos);
    }

    const std::string bad_section = write_temp("lesctl_badsec.toml", "[rocket]\nthrust = 9000\n");
    CHECK_THROWS_AS(load_config(bad_section), ConfigError);

    const std::string no_eq = write_temp("lesctl_noeq.toml", "[plant]\ncart_mass 1.0\n");
    try {
        load_config(no_eq);
        CHECK(false);
    } catch (const ConfigError& e) {
        CHECK(e.line() == 2);
    }

    const std::string bad_kind = write_temp("lesctl_badkind.toml", "[policy]\nkind = \"walrus\"\n");
    CHECK_THROWS_AS(load_config(bad_kind), ConfigError);
}

TEST_CASE("config: nonpositive physical parameters are rejected") {
    const std::string neg_mass = write_temp("lesctl_negmass.toml", "[plant]\ncart_mass = -1.0\n");
    CHECK_THROWS_AS(load_config(neg_mass), NumericalError);
    const std::string zero_r = write_temp("lesctl_zeror.toml", "[obstacles]\nradius = 0.0\n");
    CHECK_THROWS_AS(load_config(zero_r), NumericalError);
}

TEST_CASE("config: comments, blank lines, and RUN_DIR override") {
    const std::string path = write_temp("lesctl_cmt.toml",
                                        "# experiment\n[train]\nepochs = 7  # short\n\nseed = 3\n");
    ExperimentConfig cfg = load_config(path);
    CHECK(cfg.train.epochs == 7);
    CHECK(cfg.train.seed == 3);

    setenv("RUN_DIR", "/tmp/lesctl_rundir_override", 1);
    apply_env_overrides(cfg);
    CHECK(cfg.output_dir == "/tmp/lesctl_rundir_override");
    unsetenv("RUN_DIR");
}

TEST_CASE("checkpoint: save/load round-trips parameters bit-exactly") {
    ExperimentConfig cfg;
    const Designed d = design_from_config(cfg);
    PolicySizes sizes;
    sizes.n_q = 4;
    sizes.readout_hidden = {6, 6};
    sizes.init_hidden = 5;
    cfg.sizes = sizes;
    const AnyPolicy pol = make_policy(PolicyKind::youla, d.lqr.K, cfg.plant, cfg.obstacles, sizes);
    const ParamStore params = policy_init_params(pol, 123);

    const std::string path = (fs::temp_directory_path() / "lesctl_ck.json").string();
    save_checkpoint(path, checkpoint_of(PolicyKind::youla, sizes, cfg.plant, cfg.obstacles,
                                        d.lqr.K, params, 123, 42));
    const Checkpoint back = load_checkpoint(path);
    CHECK(back.kind == PolicyKind::youla);
    CHECK(back.epochs_trained == 42);
    const ParamStore restored = back.make_params();
    REQUIRE(restored.size() == params.size());
    for (std::size_t i = 0; i < params.size(); ++i)
        CHECK(restored.values()[i] == params.values()[i]);
    for (std::size_t i = 0; i < 4; ++i) CHECK(back.K(0, i) == d.lqr.K(0, i));
}

TEST_CASE("trajectory CSV uses the documented schema") {
    ExperimentConfig cfg;
    const Designed d = design_from_config(cfg);
    PolicySizes sizes;
    sizes.n_q = 4;
    sizes.readout_hidden = {6, 6};
    sizes.init_hidden = 5;
    const AnyPolicy pol = make_policy(PolicyKind::youla, d.lqr.K, cfg.plant, cfg.obstacles, sizes);
    const Rollout r = simulate(pol, policy_init_params(pol, 7), Vec{0.05, 0, 0.05, 0}, 0.01, 10);

    const std::string path = (fs::temp_directory_path() / "lesctl_traj.csv").string();
    write_trajectory_csv(path, r, cfg.plant);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "t,p,pdot,theta,thetadot,u,tip_x,tip_y,stage_cost");
    int lines = 0;
    std::string line;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 11);
}

TEST_CASE("cli: lqr prints the gain with a Hurwitz verdict and exits 0") {
    const CmdResult r = run_cli("lqr");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("\"hurwitz\": true") != std::string::npos);
    CHECK(r.output.find("\"K\"") != std::string::npos);
}

TEST_CASE("cli: malformed config exits 1 and names the line") {
    const std::string path = write_temp("lesctl_cli_bad.toml", "[plant]\ncart_mass == 1\n");
    const CmdResult r = run_cli("lqr --config " + path);
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("line 2") != std::string::npos);
}

TEST_CASE("cli: numerical failures exit 2") {
    // horizon not an integer multiple of the step
    const std::string path = write_temp("lesctl_cli_badh.toml", "[train]\nhorizon = 0.015\nstep = 0.01\n");
    const CmdResult r = run_cli("train --config " + path + " --out /tmp/lesctl_never");
    CHECK(r.exit_code == 2);
}

TEST_CASE("cli: train is deterministic and compare reports side by side") {
    const std::string cfg_text =
        "[policy]\nkind = \"youla\"\nn_q = 4\nreadout_hidden = [6, 6]\ninit_hidden = 5\n"
        "[train]\nhorizon = 0.1\nstep = 0.01\nbatch = 2\nepochs = 2\nseed = 0\n";
    const std::string path = write_temp("lesctl_cli_tiny.toml", cfg_text);

    const std::string dir_a = (fs::temp_directory_path() / "lesctl_run_a").string();
    const std::string dir_b = (fs::temp_directory_path() / "lesctl_run_b").string();
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);

    CHECK(run_cli("train --config " + path + " --out " + dir_a).exit_code == 0);
    CHECK(run_cli("train --config " + path + " --out " + dir_b).exit_code == 0);

    auto slurp = [](const std::string& p) {
        std::ifstream in(p);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    CHECK(slurp(dir_a + "/curve.csv") == slurp(dir_b + "/curve.csv"));
    CHECK(fs::exists(dir_a + "/checkpoint.json"));
    CHECK(fs::exists(dir_a + "/config.resolved.toml"));
    CHECK(fs::exists(dir_a + "/trajectories/final_nominal.csv"));

    const CmdResult cmp = run_cli("compare " + dir_a + " " + dir_b);
    CHECK(cmp.exit_code == 0);
    CHECK(cmp.output.find("youla") != std::string::npos);

    // identical runs give identical rows
    std::stringstream ss(cmp.output);
    std::string header, row_a, row_b;
    std::getline(ss, header);
    std::getline(ss, row_a);
    std::getline(ss, row_b);
    CHECK(row_a == row_b);
}

TEST_CASE("cli: compare on an empty directory exits 1 naming the missing file") {
    const std::string dir = (fs::temp_directory_path() / "lesctl_empty_run").string();
    fs::create_directories(dir);
    const CmdResult r = run_cli("compare " + dir);
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("summary.json") != std::string::npos);
}

TEST_CASE("cli: multi-seed training writes the envelope") {
    const std::string cfg_text =
        "[policy]\nkind = \"youla\"\nn_q = 4\nreadout_hidden = [6, 6]\ninit_hidden = 5\n"
        "[train]\nhorizon = 0.1\nstep = 0.01\nbatch = 2\nepochs = 2\n";
    const std::string path = write_temp("lesctl_cli_seeds.toml", cfg_text);
    const std::string dir = (fs::temp_directory_path() / "lesctl_run_seeds").string();
    fs::remove_all(dir);
    CHECK(run_cli("train --config " + path + " --seeds 0,1 --out " + dir).exit_code == 0);
    CHECK(fs::exists(dir + "/envelope.csv"));
    CHECK(fs::exists(dir + "/seed0/curve.csv"));
    CHECK(fs::exists(dir + "/seed1/curve.csv"));

    std::ifstream in(dir + "/envelope.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "epoch,mean_cost,min_cost,max_cost");
}
