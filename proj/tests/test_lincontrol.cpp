#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lesctl/lincontrol.hpp"
#include "lesctl/plant.hpp"
#include "test_helpers.hpp"

using namespace lesctl;

TEST_CASE("solve_lyapunov: scalar and decoupled diagonal cases") {
    const Mat P1 = solve_lyapunov(Mat(1, 1, {-1.0}), Mat(1, 1, {1.0}));
    CHECK(P1(0, 0) == doctest::Approx(0.5).epsilon(1e-14));

    Mat A(2, 2);
    A(0, 0) = -1.0;
    A(1, 1) = -2.0;
    const Mat P2 = solve_lyapunov(A, Mat::identity(2));
    CHECK(P2(0, 0) == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(P2(1, 1) == doctest::Approx(0.25).epsilon(1e-13));
    CHECK(std::fabs(P2(0, 1)) <= 1e-14);
}

TEST_CASE("solve_lyapunov: imaginary-axis spectrum is rejected") {
    const Mat A(2, 2, {0.0, 1.0, 0.0, 0.0});  // nilpotent
    CHECK_THROWS_AS(solve_lyapunov(A, Mat::identity(2)), NumericalError);
}

TEST_CASE("solve_lyapunov: residual property on 100 random Hurwitz matrices") {
    Rng rng(42);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + trial % 5;
        const Mat A = testing::random_hurwitz(n, rng);
        Mat Q = testing::random_matrix(n, n, rng);
        Q = Q * Q.transpose();  // PSD right-hand side
        const Mat P = solve_lyapunov(A, Q);
        const Mat R = A.transpose() * P + P * A + Q;
        CHECK(R.frobenius_norm() <= 1e-10 * (1.0 + Q.frobenius_norm()));
    }
}

TEST_CASE("is_hurwitz: diagonal, nilpotent, and the open-loop cart-pendulum") {
    Mat stable(2, 2);
    stable(0, 0) = -1.0;
    stable(1, 1) = -2.0;
    CHECK(is_hurwitz(stable).hurwitz);

    const Mat nilpotent(2, 2, {0.0, 1.0, 0.0, 0.0});
    CHECK(!is_hurwitz(nilpotent).hurwitz);

    const InputAffinePlant cp = make_cartpole_plant({});
    CHECK(!is_hurwitz(cp.A0).hurwitz);              // upright pendulum is unstable
    CHECK(!testing::routh_hurwitz_stable(cp.A0));   // characteristic-polynomial oracle agrees
}

TEST_CASE("is_hurwitz agrees with the Routh-Hurwitz oracle on random matrices") {
    Rng rng(2024);
    int stable_seen = 0, unstable_seen = 0;
    for (int trial = 0; trial < 400; ++trial) {
        const std::size_t n = trial % 2 == 0 ? 2 : 4;
        Mat A = testing::random_matrix(n, n, rng, 1.0);
        // shift to get a mix of stable and unstable samples
        const double shift = rng.uniform(-2.5, 1.0);
        for (std::size_t i = 0; i < n; ++i) A(i, i) += shift;
        const bool oracle = testing::routh_hurwitz_stable(A);
        const bool ours = is_hurwitz(A).hurwitz;
        CHECK(ours == oracle);
        (oracle ? stable_seen : unstable_seen) += 1;
    }
    CHECK(stable_seen > 50);
    CHECK(unstable_seen > 50);
}

TEST_CASE("check_stabilizable: examples") {
    const InputAffinePlant cp = make_cartpole_plant({});
    CHECK(check_stabilizable(cp.A0, cp.B0));

    Mat A(2, 2);
    A(0, 0) = 1.0;
    A(1, 1) = -1.0;
    const Mat B(2, 1, {0.0, 1.0});
    CHECK(!check_stabilizable(A, B));  // unstable mode uncontrollable

    CHECK(check_stabilizable(Mat(1, 1, {0.0}), Mat(1, 1, {1.0})));
}

TEST_CASE("lqr: scalar analytic CARE") {
    const LqrResult r = lqr(Mat(1, 1, {0.0}), Mat(1, 1, {1.0}), Mat(1, 1, {1.0}), Mat(1, 1, {1.0}));
    CHECK(std::fabs(r.P(0, 0) - 1.0) <= 1e-10);
    CHECK(std::fabs(r.K(0, 0) + 1.0) <= 1e-10);
    CHECK(r.residual <= 1e-8);
}

TEST_CASE("lqr: already-stable plant with vanishing state cost gives K -> 0") {
    const Mat A(1, 1, {-1.0});
    const Mat B(1, 1, {1.0});
    const Mat R(1, 1, {1.0});
    double prev = 1.0;
    for (double delta : {1e-2, 1e-4, 1e-6}) {
        const LqrResult r = lqr(A, B, Mat(1, 1, {delta}), R);
        const double k = std::fabs(r.K(0, 0));
        CHECK(k < prev);
        prev = k;
    }
    CHECK(prev <= 1e-5);  // K -> 0 as delta -> 0
}

TEST_CASE("lqr: cart-pendulum with the experiment weights") {
    const InputAffinePlant cp = make_cartpole_plant({});
    const Mat Qw = Mat::diag(Vec{10.0, 1.0, 100.0, 1.0});
    const Mat Rw(1, 1, {0.1});
    const LqrResult r = lqr(cp.A0, cp.B0, Qw, Rw);
    CHECK(r.residual <= 1e-8);
    CHECK(is_hurwitz(cp.A0 + cp.B0 * r.K).hurwitz);
    CHECK(testing::routh_hurwitz_stable(cp.A0 + cp.B0 * r.K));
    CHECK(care_residual(cp.A0, cp.B0, Qw, Rw, r.P) <= 1e-8);
}

TEST_CASE("lqr: Kleinman residuals decrease monotonically after the first iterate") {
    Rng rng(77);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 3 + trial % 3;
        Mat A = testing::random_matrix(n, n, rng, 1.0);
        const Mat B = testing::random_matrix(n, 1, rng, 1.0);
        const LqrResult r = lqr(A, B, Mat::identity(n), Mat::identity(1));
        CHECK(is_hurwitz(A + B * r.K).hurwitz);
        for (std::size_t i = 2; i < r.residual_history.size(); ++i)
            CHECK(r.residual_history[i] <= r.residual_history[i - 1] * (1.0 + 1e-9));
    }
}

TEST_CASE("lqr: zero input matrix is not stabilizable") {
    const Mat A(2, 2, {1.0, 0.0, 0.0, -1.0});
    const Mat B(2, 1, {0.0, 0.0});
    CHECK_THROWS_AS(lqr(A, B, Mat::identity(2), Mat::identity(1)), NumericalError);
}

TEST_CASE("fd_jacobian: quadratic map") {
    auto f = [](const Vec& x) { return Vec{x[0] * x[0], x[0] * x[1]}; };
    const Mat J = fd_jacobian(f, Vec{2.0, 3.0});
    CHECK(J(0, 0) == doctest::Approx(4.0).epsilon(1e-8));
    CHECK(J(0, 1) == doctest::Approx(0.0).epsilon(1e-8));
    CHECK(J(1, 0) == doctest::Approx(3.0).epsilon(1e-8));
    CHECK(J(1, 1) == doctest::Approx(2.0).epsilon(1e-8));
}
