#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lesctl/linalg.hpp"

namespace lesctl {

/// Solves A'P + PA = -Q for symmetric P by vectorizing to an n^2 x n^2
/// dense linear system. Throws NumericalError when A and -A share an
/// eigenvalue pair summing to zero (singular system).
Mat solve_lyapunov(const Mat& A, const Mat& Q);

struct HurwitzReport {
    bool hurwitz = false;
    std::string reason;  // "" on success, otherwise why the test failed
};

/// Lyapunov test: A is Hurwitz iff A'P + PA = -I has a positive-definite
/// solution (checked via Cholesky). No eigensolver involved.
HurwitzReport is_hurwitz(const Mat& A);

/// Constructive test: the Bass seed plus Kleinman iteration succeed and
/// produce K with A + BK Hurwitz.
bool check_stabilizable(const Mat& A, const Mat& B);

struct LqrResult {
    Mat K;  // u = K x, K = -R^{-1} B' P
    Mat P;  // stabilizing CARE solution
    int iterations = 0;
    double residual = 0.0;                  // final CARE residual (Frobenius)
    std::vector<double> residual_history;   // residual after each Kleinman iterate
};

/// Continuous-time LQR via Kleinman-Newton iteration from a Bass-type
/// stabilizing seed. Throws NumericalError on "not stabilizable" or
/// non-convergence within max_iter.
LqrResult lqr(const Mat& A, const Mat& B, const Mat& Qw, const Mat& Rw, double tol = 1e-8,
              int max_iter = 100);

/// Frobenius norm of A'P + PA - P B R^{-1} B' P + Q.
double care_residual(const Mat& A, const Mat& B, const Mat& Qw, const Mat& Rw, const Mat& P);

/// Central finite-difference Jacobian of f at x0.
Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x0, double step = 1e-6);

}  // namespace lesctl
