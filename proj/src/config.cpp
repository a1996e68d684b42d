#include "lesctl/config.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace lesctl {

namespace {

struct RawValue {
    enum class Kind { number, string, boolean, array } kind = Kind::number;
    double num = 0.0;
    std::string str;
    bool b = false;
    std::vector<double> arr;
    int line = 0;
};

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::string strip_comment(const std::string& s) {
    bool in_str = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') in_str = !in_str;
        if (s[i] == '#' && !in_str) return s.substr(0, i);
    }
    return s;
}

RawValue parse_value(const std::string& text, int line) {
    RawValue v;
    v.line = line;
    const std::string t = trim(text);
    if (t.empty()) throw ConfigError(line, "missing value");
    if (t.front() == '"') {
        if (t.size() < 2 || t.back() != '"') throw ConfigError(line, "unterminated string");
        v.kind = RawValue::Kind::string;
        v.str = t.substr(1, t.size() - 2);
        return v;
    }
    if (t == "true" || t == "false") {
        v.kind = RawValue::Kind::boolean;
        v.b = (t == "true");
        return v;
    }
    if (t.front() == '[') {
        if (t.back() != ']') throw ConfigError(line, "unterminated array");
        v.kind = RawValue::Kind::array;
        std::string inner = t.substr(1, t.size() - 2);
        std::stringstream ss(inner);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty()) throw ConfigError(line, "empty array element");
            try {
                std::size_t pos = 0;
                v.arr.push_back(std::stod(item, &pos));
                if (pos != item.size()) throw std::invalid_argument("");
            } catch (...) {
                throw ConfigError(line, "bad array element '" + item + "'");
            }
        }
        return v;
    }
    try {
        std::size_t pos = 0;
        v.num = std::stod(t, &pos);
        if (pos != t.size()) throw std::invalid_argument("");
    } catch (...) {
        throw ConfigError(line, "bad value '" + t + "'");
    }
    return v;
}

class Applier {
public:
    explicit Applier(ExperimentConfig& cfg) : cfg_(cfg) {}

    void apply(const std::string& section, const std::string& key, const RawValue& v) {
        const int ln = v.line;
        if (section == "plant") {
            if (key == "cart_mass") cfg_.plant.cart_mass = num(v);
            else if (key == "pend_mass") cfg_.plant.pend_mass = num(v);
            else if (key == "length") cfg_.plant.length = num(v);
            else if (key == "friction") cfg_.plant.friction = num(v);
            else if (key == "gravity") cfg_.plant.gravity = num(v);
            else throw ConfigError(ln, "unknown key plant." + key);
        } else if (section == "obstacles") {
            if (key == "center1") cfg_.obstacles.center1 = point(v);
            else if (key == "center2") cfg_.obstacles.center2 = point(v);
            else if (key == "radius") cfg_.obstacles.radius = num(v);
            else if (key == "margin") cfg_.obstacles.margin = num(v);
            else if (key == "beta") cfg_.obstacles.beta = num(v);
            else if (key == "kappa") cfg_.obstacles.kappa = num(v);
            else if (key == "gamma_state") cfg_.obstacles.gamma_state = num(v);
            else if (key == "gamma_obstacle") cfg_.obstacles.gamma_obstacle = num(v);
            else throw ConfigError(ln, "unknown key obstacles." + key);
        } else if (section == "lqr") {
            if (key == "q_diag") cfg_.lqr_q_diag = array(v);
            else if (key == "r") cfg_.lqr_r = num(v);
            else throw ConfigError(ln, "unknown key lqr." + key);
        } else if (section == "policy") {
            if (key == "kind") {
                try {
                    cfg_.policy_kind = parse_policy_kind(str(v));
                } catch (const std::invalid_argument& e) {
                    throw ConfigError(ln, e.what());
                }
            } else if (key == "n_q") cfg_.sizes.n_q = integer(v);
            else if (key == "readout_hidden") cfg_.sizes.readout_hidden = int_array(v);
            else if (key == "init_hidden") cfg_.sizes.init_hidden = integer(v);
            else if (key == "baseline_hidden") cfg_.sizes.baseline_hidden = int_array(v);
            else if (key == "lstm_hidden") cfg_.sizes.lstm_hidden = integer(v);
            else throw ConfigError(ln, "unknown key policy." + key);
        } else if (section == "train") {
            if (key == "horizon") cfg_.train.horizon = num(v);
            else if (key == "step") cfg_.train.step = num(v);
            else if (key == "batch") cfg_.train.batch = integer(v);
            else if (key == "epochs") cfg_.train.epochs = integer(v);
            else if (key == "lr") cfg_.train.lr = num(v);
            else if (key == "init_std") cfg_.train.init_std = num(v);
            else if (key == "seed") cfg_.train.seed = static_cast<std::uint64_t>(integer(v));
            else if (key == "threads") cfg_.train.threads = integer(v);
            else if (key == "hurwitz_check_every") cfg_.train.hurwitz_check_every = integer(v);
            else throw ConfigError(ln, "unknown key train." + key);
        } else if (section == "verify") {
            if (key == "draws") cfg_.verify.draws = integer(v);
            else if (key == "eval_horizon") cfg_.verify.eval_horizon = num(v);
            else if (key == "decay_window_frac") cfg_.verify.decay_window_frac = num(v);
            else if (key == "lyapunov_tol") cfg_.verify.lyapunov_tol = num(v);
            else if (key == "riccati_tol") cfg_.verify.riccati_tol = num(v);
            else throw ConfigError(ln, "unknown key verify." + key);
        } else if (section == "output") {
            if (key == "dir") cfg_.output_dir = str(v);
            else throw ConfigError(ln, "unknown key output." + key);
        } else {
            throw ConfigError(ln, "unknown section [" + section + "]");
        }
    }

private:
    static double num(const RawValue& v) {
        if (v.kind != RawValue::Kind::number) throw ConfigError(v.line, "expected a number");
        return v.num;
    }
    static int integer(const RawValue& v) {
        const double d = num(v);
        const int i = static_cast<int>(d);
        if (d != i) throw ConfigError(v.line, "expected an integer");
        return i;
    }
    static std::string str(const RawValue& v) {
        if (v.kind != RawValue::Kind::string) throw ConfigError(v.line, "expected a string");
        return v.str;
    }
    static std::vector<double> array(const RawValue& v) {
        if (v.kind != RawValue::Kind::array) throw ConfigError(v.line, "expected an array");
        return v.arr;
    }
    static std::vector<int> int_array(const RawValue& v) {
        std::vector<int> out;
        for (double d : array(v)) {
            const int i = static_cast<int>(d);
            if (d != i) throw ConfigError(v.line, "expected integer array");
            out.push_back(i);
        }
        return out;
    }
    static std::array<double, 2> point(const RawValue& v) {
        const auto a = array(v);
        if (a.size() != 2) throw ConfigError(v.line, "expected a 2-element point");
        return {a[0], a[1]};
    }

    ExperimentConfig& cfg_;
};

}  // namespace

namespace {

void validate(const ExperimentConfig& cfg) {
    auto positive = [](double v, const char* what) {
        if (!(v > 0.0)) throw NumericalError(std::string(what) + " must be strictly positive");
    };
    positive(cfg.plant.cart_mass, "plant.cart_mass");
    positive(cfg.plant.pend_mass, "plant.pend_mass");
    positive(cfg.plant.length, "plant.length");
    positive(cfg.plant.friction, "plant.friction");
    positive(cfg.plant.gravity, "plant.gravity");
    positive(cfg.obstacles.radius, "obstacles.radius");
    positive(cfg.obstacles.margin, "obstacles.margin");
    positive(cfg.obstacles.beta, "obstacles.beta");
    positive(cfg.obstacles.kappa, "obstacles.kappa");
    if (cfg.obstacles.gamma_state < 0.0 || cfg.obstacles.gamma_obstacle < 0.0)
        throw NumericalError("obstacle cost weights must be nonnegative");
    positive(cfg.lqr_r, "lqr.r");
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(0, "cannot open " + path);
    ExperimentConfig cfg;
    Applier applier(cfg);
    std::string line, section;
    int ln = 0;
    while (std::getline(in, line)) {
        ++ln;
        const std::string t = trim(strip_comment(line));
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw ConfigError(ln, "unterminated section header");
            section = trim(t.substr(1, t.size() - 2));
            if (section.empty()) throw ConfigError(ln, "empty section name");
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError(ln, "expected key = value");
        const std::string key = trim(t.substr(0, eq));
        if (key.empty()) throw ConfigError(ln, "empty key");
        if (section.empty()) throw ConfigError(ln, "key outside any [section]");
        applier.apply(section, key, parse_value(t.substr(eq + 1), ln));
    }
    validate(cfg);
    return cfg;
}

void apply_env_overrides(ExperimentConfig& cfg) {
    if (const char* rd = std::getenv("RUN_DIR")) cfg.output_dir = rd;
}

void write_resolved_config(const ExperimentConfig& cfg, std::ostream& os) {
    os << std::setprecision(17);
    os << "[plant]\n";
    os << "cart_mass = " << cfg.plant.cart_mass << "\n";
    os << "pend_mass = " << cfg.plant.pend_mass << "\n";
    os << "length = " << cfg.plant.length << "\n";
    os << "friction = " << cfg.plant.friction << "\n";
    os << "gravity = " << cfg.plant.gravity << "\n\n";
    os << "[obstacles]\n";
    os << "center1 = [" << cfg.obstacles.center1[0] << ", " << cfg.obstacles.center1[1] << "]\n";
    os << "center2 = [" << cfg.obstacles.center2[0] << ", " << cfg.obstacles.center2[1] << "]\n";
    os << "radius = " << cfg.obstacles.radius << "\n";
    os << "margin = " << cfg.obstacles.margin << "\n";
    os << "beta = " << cfg.obstacles.beta << "\n";
    os << "kappa = " << cfg.obstacles.kappa << "\n";
    os << "gamma_state = " << cfg.obstacles.gamma_state << "\n";
    os << "gamma_obstacle = " << cfg.obstacles.gamma_obstacle << "\n\n";
    os << "[lqr]\n";
    os << "q_diag = [";
    for (std::size_t i = 0; i < cfg.lqr_q_diag.size(); ++i)
        os << (i ? ", " : "") << cfg.lqr_q_diag[i];
    os << "]\n";
    os << "r = " << cfg.lqr_r << "\n\n";
    os << "[policy]\n";
    os << "kind = \"" << policy_kind_name(cfg.policy_kind) << "\"\n";
    os << "n_q = " << cfg.sizes.n_q << "\n";
    os << "readout_hidden = [";
    for (std::size_t i = 0; i < cfg.sizes.readout_hidden.size(); ++i)
        os << (i ? ", " : "") << cfg.sizes.readout_hidden[i];
    os << "]\n";
    os << "init_hidden = " << cfg.sizes.init_hidden << "\n";
    os << "baseline_hidden = [";
    for (std::size_t i = 0; i < cfg.sizes.baseline_hidden.size(); ++i)
        os << (i ? ", " : "") << cfg.sizes.baseline_hidden[i];
    os << "]\n";
    os << "lstm_hidden = " << cfg.sizes.lstm_hidden << "\n\n";
    os << "[train]\n";
    os << "horizon = " << cfg.train.horizon << "\n";
    os << "step = " << cfg.train.step << "\n";
    os << "batch = " << cfg.train.batch << "\n";
    os << "epochs = " << cfg.train.epochs << "\n";
    os << "lr = " << cfg.train.lr << "\n";
    os << "init_std = " << cfg.train.init_std << "\n";
    os << "seed = " << cfg.train.seed << "\n";
    os << "threads = " << cfg.train.threads << "\n";
    os << "hurwitz_check_every = " << cfg.train.hurwitz_check_every << "\n\n";
    os << "[verify]\n";
    os << "draws = " << cfg.verify.draws << "\n";
    os << "eval_horizon = " << cfg.verify.eval_horizon << "\n";
    os << "decay_window_frac = " << cfg.verify.decay_window_frac << "\n";
    os << "lyapunov_tol = " << cfg.verify.lyapunov_tol << "\n";
    os << "riccati_tol = " << cfg.verify.riccati_tol << "\n\n";
    os << "[output]\n";
    os << "dir = \"" << cfg.output_dir << "\"\n";
}

void write_resolved_config_file(const ExperimentConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_resolved_config(cfg, out);
}

}  // namespace lesctl
