#include "lesctl/io.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>

namespace lesctl {

namespace {
void open_or_throw(std::ofstream& out, const std::string& path) {
    out.open(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.precision(17);
}
}  // namespace

void write_trajectory_csv(const std::string& path, const Rollout& r, const CartPoleParams& pp) {
    std::ofstream out;
    open_or_throw(out, path);
    out << "t,p,pdot,theta,thetadot,u,tip_x,tip_y,stage_cost\n";
    for (std::size_t k = 0; k < r.t.size(); ++k) {
        const auto& z = r.z[k];
        const double tip_x = z[0] + pp.length * std::sin(z[2]);
        const double tip_y = pp.length * std::cos(z[2]);
        out << r.t[k] << ',' << z[0] << ',' << z[1] << ',' << z[2] << ',' << z[3] << ','
            << r.u[k][0] << ',' << tip_x << ',' << tip_y << ',' << r.stage_cost[k] << '\n';
    }
}

void write_curve_csv(const std::string& path, const LearningCurve& curve) {
    std::ofstream out;
    open_or_throw(out, path);
    out << "epoch,mean_cost,min_cost,max_cost\n";
    for (std::size_t e = 0; e < curve.epochs.size(); ++e) {
        const auto& s = curve.epochs[e];
        out << (e + 1) << ',' << s.mean_cost << ',' << s.min_cost << ',' << s.max_cost << '\n';
    }
}

void write_envelope_csv(const std::string& path, const std::vector<LearningCurve>& curves) {
    std::ofstream out;
    open_or_throw(out, path);
    out << "epoch,mean_cost,min_cost,max_cost\n";
    if (curves.empty()) return;
    const std::size_t n_epochs = curves.front().epochs.size();
    for (std::size_t e = 0; e < n_epochs; ++e) {
        double mean = 0.0, mn = 0.0, mx = 0.0;
        for (std::size_t s = 0; s < curves.size(); ++s) {
            const double c = curves[s].epochs.at(e).mean_cost;
            mean += c;
            mn = s == 0 ? c : std::min(mn, c);
            mx = s == 0 ? c : std::max(mx, c);
        }
        mean /= static_cast<double>(curves.size());
        out << (e + 1) << ',' << mean << ',' << mn << ',' << mx << '\n';
    }
}

namespace {

nlohmann::json plant_json(const CartPoleParams& p) {
    return {{"cart_mass", p.cart_mass},
            {"pend_mass", p.pend_mass},
            {"length", p.length},
            {"friction", p.friction},
            {"gravity", p.gravity}};
}

CartPoleParams plant_from_json(const nlohmann::json& j) {
    CartPoleParams p;
    p.cart_mass = j.at("cart_mass");
    p.pend_mass = j.at("pend_mass");
    p.length = j.at("length");
    p.friction = j.at("friction");
    p.gravity = j.at("gravity");
    return p;
}

nlohmann::json obstacles_json(const ObstacleField& o) {
    return {{"center1", {o.center1[0], o.center1[1]}},
            {"center2", {o.center2[0], o.center2[1]}},
            {"radius", o.radius},
            {"margin", o.margin},
            {"beta", o.beta},
            {"kappa", o.kappa},
            {"gamma_state", o.gamma_state},
            {"gamma_obstacle", o.gamma_obstacle}};
}

ObstacleField obstacles_from_json(const nlohmann::json& j) {
    ObstacleField o;
    o.center1 = {j.at("center1")[0], j.at("center1")[1]};
    o.center2 = {j.at("center2")[0], j.at("center2")[1]};
    o.radius = j.at("radius");
    o.margin = j.at("margin");
    o.beta = j.at("beta");
    o.kappa = j.at("kappa");
    o.gamma_state = j.at("gamma_state");
    o.gamma_obstacle = j.at("gamma_obstacle");
    return o;
}

}  // namespace

AnyPolicy Checkpoint::make_policy_object() const {
    return make_policy(kind, K, plant, obstacles, sizes);
}

ParamStore Checkpoint::make_params() const {
    AnyPolicy pol = make_policy_object();
    ParamStore ps = policy_zero_params(pol);
    for (const auto& [name, vals] : slices) {
        auto sl = ps.slice(name);
        if (sl.size() != vals.size())
            throw DimensionError("checkpoint slice '" + name + "' has wrong length");
        std::copy(vals.begin(), vals.end(), sl.begin());
    }
    return ps;
}

Checkpoint checkpoint_of(PolicyKind kind, const PolicySizes& sizes, const CartPoleParams& plant,
                         const ObstacleField& obstacles, const Mat& K, const ParamStore& params,
                         std::uint64_t seed, int epochs_trained) {
    Checkpoint ck;
    ck.kind = kind;
    ck.sizes = sizes;
    ck.plant = plant;
    ck.obstacles = obstacles;
    ck.K = K;
    ck.seed = seed;
    ck.epochs_trained = epochs_trained;
    for (const auto& s : params.layout()) {
        auto sp = params.slice(s.name);
        ck.slices.emplace_back(s.name, std::vector<double>(sp.begin(), sp.end()));
    }
    return ck;
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    nlohmann::json j;
    j["kind"] = policy_kind_name(ck.kind);
    j["dims"] = {{"n_q", ck.sizes.n_q},
                 {"readout_hidden", ck.sizes.readout_hidden},
                 {"init_hidden", ck.sizes.init_hidden},
                 {"baseline_hidden", ck.sizes.baseline_hidden},
                 {"lstm_hidden", ck.sizes.lstm_hidden}};
    j["plant"] = plant_json(ck.plant);
    j["obstacles"] = obstacles_json(ck.obstacles);
    nlohmann::json kro = nlohmann::json::array();
    for (std::size_t i = 0; i < ck.K.rows; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t jj = 0; jj < ck.K.cols; ++jj) row.push_back(ck.K(i, jj));
        kro.push_back(row);
    }
    j["K"] = kro;
    nlohmann::json slices;
    for (const auto& [name, vals] : ck.slices) slices[name] = vals;
    j["slices"] = slices;
    std::size_t param_count = 0;
    for (const auto& [name, vals] : ck.slices) param_count += vals.size();
    j["meta"] = {{"seed", ck.seed},
                 {"epochs_trained", ck.epochs_trained},
                 {"param_count", param_count}};

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json j;
    in >> j;

    Checkpoint ck;
    ck.kind = parse_policy_kind(j.at("kind"));
    const auto& d = j.at("dims");
    ck.sizes.n_q = d.at("n_q");
    ck.sizes.readout_hidden = d.at("readout_hidden").get<std::vector<int>>();
    ck.sizes.init_hidden = d.at("init_hidden");
    ck.sizes.baseline_hidden = d.at("baseline_hidden").get<std::vector<int>>();
    ck.sizes.lstm_hidden = d.at("lstm_hidden");
    ck.plant = plant_from_json(j.at("plant"));
    ck.obstacles = obstacles_from_json(j.at("obstacles"));
    const auto& kj = j.at("K");
    ck.K = Mat(kj.size(), kj.at(0).size());
    for (std::size_t i = 0; i < ck.K.rows; ++i)
        for (std::size_t jj = 0; jj < ck.K.cols; ++jj) ck.K(i, jj) = kj.at(i).at(jj);
    for (const auto& [name, vals] : j.at("slices").items())
        ck.slices.emplace_back(name, vals.get<std::vector<double>>());
    ck.seed = j.at("meta").at("seed");
    ck.epochs_trained = j.at("meta").at("epochs_trained");
    return ck;
}

}  // namespace lesctl
