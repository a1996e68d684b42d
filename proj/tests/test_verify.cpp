#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lesctl/backprop.hpp"
#include "lesctl/lincontrol.hpp"
#include "lesctl/verify.hpp"
#include "test_helpers.hpp"

using namespace lesctl;

namespace {
const CartPoleParams kPlantParams;
const ObstacleField kObs;

Mat lqr_gain() {
    const InputAffinePlant p = make_cartpole_plant(kPlantParams);
    return lqr(p.A0, p.B0, Mat::diag(Vec{10, 1, 100, 1}), Mat(1, 1, {0.1})).K;
}
}  // namespace

TEST_CASE("closed_loop_jacobian: linear static feedback recovers A + BK") {
    Rng rng(9);
    const Mat A = testing::random_matrix(3, 3, rng);
    const Mat B = testing::random_matrix(3, 1, rng);
    const Mat K = testing::random_matrix(1, 3, rng);
    auto field = [&](const Vec& x) { return (A * x) + (B * (K * x)); };
    const Mat J = closed_loop_jacobian(field, 3);
    const Mat expect = A + B * K;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(J(i, j) == doctest::Approx(expect(i, j)).epsilon(1e-9));
}

TEST_CASE("closed_loop_jacobian: rejects fields whose origin is not an equilibrium") {
    auto field = [](const Vec& x) { return Vec{x[0] + 1.0}; };
    CHECK_THROWS_AS(closed_loop_jacobian(field, 1), NumericalError);
}

TEST_CASE("closed_loop_jacobian: Youla policy with zero nets matches hand-assembled blocks") {
    YoulaConfig cfg;
    cfg.n_q = 6;
    cfg.readout_hidden = {12, 12};
    cfg.init_hidden = 10;
    const Mat K = lqr_gain();
    const YoulaPolicy pol(cfg, K, kPlantParams, kObs);

    ParamStore ps = pol.init_params(77);
    for (double& v : ps.slice("phi3")) v = 0.0;
    for (double& v : ps.slice("B_q")) v = 0.0;

    const AnyPolicy any = pol;
    const auto J = policy_closed_loop_jacobian(any, ps);
    REQUIRE(J.has_value());

    const int n = 4, n_q = cfg.n_q;
    const auto w = pol.weights<double>(std::span<const double>(ps.values()));
    const InputAffinePlant plant = make_cartpole_plant(kPlantParams);
    const Mat BK = plant.B0 * K;

    // rows for dx: [A, BK, 0, 0]
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            CHECK(std::fabs((*J)(i, j) - plant.A0(i, j)) <= 1e-5);
            CHECK(std::fabs((*J)(i, n + j) - BK(i, j)) <= 1e-5);
        }
    // rows for dxhat: [A + diag|mu|, BK - diag|mu|, 0, 0]
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double d = i == j ? std::fabs(w.mu_xhat[i]) : 0.0;
            CHECK(std::fabs((*J)(n + i, j) - (plant.A0(i, j) + d)) <= 1e-5);
            CHECK(std::fabs((*J)(n + i, n + j) - (BK(i, j) - d)) <= 1e-5);
        }
    // q block: [-diag|mu_re|, -diag mu_im; diag mu_im, -diag|mu_re|], no coupling back
    for (int i = 0; i < n_q; ++i)
        for (int j = 0; j < n_q; ++j) {
            const double a = i == j ? std::fabs(w.mu_q_re[i]) : 0.0;
            const double b = i == j ? w.mu_q_im[i] : 0.0;
            CHECK(std::fabs((*J)(2 * n + i, 2 * n + j) + a) <= 1e-5);
            CHECK(std::fabs((*J)(2 * n + i, 2 * n + n_q + j) + b) <= 1e-5);
            CHECK(std::fabs((*J)(2 * n + n_q + i, 2 * n + j) - b) <= 1e-5);
            CHECK(std::fabs((*J)(2 * n + n_q + i, 2 * n + n_q + j) + a) <= 1e-5);
        }
    // with B_q = 0 and phi3 = 0 the q rows see no (x, xhat) coupling
    for (int i = 0; i < 2 * n_q; ++i)
        for (int j = 0; j < 2 * n; ++j) CHECK(std::fabs((*J)(2 * n + i, j)) <= 1e-5);

    CHECK(is_hurwitz(*J).hurwitz);
}

TEST_CASE("fit_decay: exact exponentials are recovered to six digits") {
    std::vector<double> ts, n1, n2;
    for (int i = 0; i <= 500; ++i) {
        const double t = 0.01 * i;
        ts.push_back(t);
        n1.push_back(std::exp(-2.0 * t));
        n2.push_back(3.0 * std::exp(-0.5 * t));
    }
    const DecayFit f1 = fit_decay(ts, n1, 0.0, 5.0);
    CHECK(std::fabs(f1.lambda - 2.0) <= 1e-6);
    CHECK(std::fabs(f1.k - 1.0) <= 1e-6);
    CHECK(f1.rmse <= 1e-9);

    const DecayFit f2 = fit_decay(ts, n2, 0.0, 5.0);
    CHECK(std::fabs(f2.lambda - 0.5) <= 1e-6);
    CHECK(std::fabs(f2.k * f2.x0_norm - 3.0) <= 1e-6);
}

TEST_CASE("fit_decay: nonpositive norms in the window are an error") {
    const std::vector<double> ts{0.0, 1.0, 2.0};
    const std::vector<double> ns{1.0, 0.0, 0.5};
    CHECK_THROWS_AS(fit_decay(ts, ns, 0.0, 2.0), NumericalError);
}

namespace {
/// x' = -x with stage cost x^2, integrated as an augmented state.
Rollout exponential_rollout(double T, double h) {
    auto field = [](const std::vector<double>& z) {
        return std::vector<double>{-z[0], z[0] * z[0]};
    };
    auto stepper = [&](const std::vector<double>& z) { return rk4_step<double>(field, z, h); };
    auto readout = [](const std::vector<double>& z) {
        return std::pair<std::vector<double>, double>({}, z[0] * z[0]);
    };
    return rollout(stepper, {1.0, 0.0}, h, static_cast<int>(std::llround(T / h)), readout);
}
}  // namespace

TEST_CASE("tail_bound_check: bound is tight for an exact exponential") {
    const Rollout r = exponential_rollout(30.0, 0.01);
    const TailReport rep = tail_bound_check(r, 1, 2.0, 1.0, 2.0);
    CHECK(rep.pointwise_ok);
    CHECK(rep.pass);
    const double analytic = std::exp(-4.0) / 2.0;
    CHECK(std::fabs(rep.actual - analytic) <= 1e-6);
    CHECK(std::fabs(rep.bound - analytic) <= 1e-6);
    CHECK(std::fabs(rep.gamma - 1.0) <= 1e-6);
    CHECK(rep.B == 0.0);  // no input channel
}

TEST_CASE("tail_bound_check: zero trajectory trivially satisfies the bound") {
    auto field = [](const std::vector<double>& z) {
        return std::vector<double>{0.0 * z[0], 0.0};
    };
    auto stepper = [&](const std::vector<double>& z) { return rk4_step<double>(field, z, 0.01); };
    auto readout = [](const std::vector<double>&) {
        return std::pair<std::vector<double>, double>({}, 0.0);
    };
    const Rollout r = rollout(stepper, {0.0, 0.0}, 0.01, 500, readout);
    const TailReport rep = tail_bound_check(r, 1, 2.0, 1.0, 2.0);
    CHECK(rep.pass);
    CHECK(rep.actual == 0.0);
    CHECK(rep.bound == 0.0);
}

TEST_CASE("tail_bound_check: pointwise cost-bound violation blocks the verdict") {
    Rollout r = exponential_rollout(10.0, 0.01);
    // corrupt one tail sample so l > M (|x|^p + |u|^p) there
    r.stage_cost[700] = 100.0;
    const TailReport rep = tail_bound_check(r, 1, 2.0, 1.0, 2.0);
    CHECK(!rep.pointwise_ok);
    CHECK(!rep.pass);
}
