#include "lesctl/lincontrol.hpp"

#include <Eigen/Dense>

namespace lesctl {

namespace {

Eigen::MatrixXd to_eigen(const Mat& m) {
    Eigen::MatrixXd e(m.rows, m.cols);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) e(i, j) = m(i, j);
    return e;
}

Mat from_eigen(const Eigen::MatrixXd& e) {
    Mat m(e.rows(), e.cols());
    for (Eigen::Index i = 0; i < e.rows(); ++i)
        for (Eigen::Index j = 0; j < e.cols(); ++j) m(i, j) = e(i, j);
    return m;
}

bool cholesky_pd(const Eigen::MatrixXd& P) {
    Eigen::LLT<Eigen::MatrixXd> llt(P);
    return llt.info() == Eigen::Success;
}

}  // namespace

Mat solve_lyapunov(const Mat& A, const Mat& Q) {
    if (A.rows != A.cols) throw DimensionError("solve_lyapunov: A must be square");
    if (Q.rows != Q.cols || Q.rows != A.rows)
        throw DimensionError("solve_lyapunov: Q shape mismatch");
    const Eigen::Index n = static_cast<Eigen::Index>(A.rows);
    const Eigen::MatrixXd Ae = to_eigen(A);
    const Eigen::MatrixXd Qe = to_eigen(Q);
    const Eigen::MatrixXd At = Ae.transpose();

    // vec(A'P) + vec(PA) = (I (x) A' + A' (x) I) vec(P), column-major vec
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n * n, n * n);
    for (Eigen::Index blk = 0; blk < n; ++blk) M.block(blk * n, blk * n, n, n) = At;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            const double aji = Ae(j, i);
            if (aji == 0.0) continue;
            for (Eigen::Index k = 0; k < n; ++k) M(i * n + k, j * n + k) += aji;
        }

    Eigen::VectorXd rhs(n * n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) rhs(j * n + i) = -Qe(i, j);

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
    Eigen::VectorXd p = lu.solve(rhs);

    Eigen::MatrixXd P(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) P(i, j) = p(j * n + i);
    P = 0.5 * (P + P.transpose()).eval();

    // Scale-aware singularity guard: the attainable residual floor grows with
    // |A||P|, so an absolute test against |Q| alone would reject huge but
    // well-posed systems (e.g. Bass seed closed loops).
    const double res = (At * P + P * Ae + Qe).norm();
    const double scale = 1.0 + Qe.norm() + Ae.norm() * P.norm();
    if (!std::isfinite(res) || res > 1e-10 * scale)
        throw NumericalError("solve_lyapunov: singular system (eigenvalue sum zero)");
    return from_eigen(P);
}

HurwitzReport is_hurwitz(const Mat& A) {
    Mat P;
    try {
        P = solve_lyapunov(A, Mat::identity(A.rows));
    } catch (const std::exception&) {
        return {false, "lyapunov_singular"};
    }
    if (!cholesky_pd(to_eigen(P))) return {false, "not_positive_definite"};
    return {true, ""};
}

double care_residual(const Mat& A, const Mat& B, const Mat& Qw, const Mat& Rw, const Mat& P) {
    const Eigen::MatrixXd Ae = to_eigen(A), Be = to_eigen(B), Qe = to_eigen(Qw), Re = to_eigen(Rw),
                          Pe = to_eigen(P);
    const Eigen::MatrixXd res =
        Ae.transpose() * Pe + Pe * Ae - Pe * Be * Re.llt().solve(Be.transpose() * Pe) + Qe;
    return res.norm();
}

LqrResult lqr(const Mat& A, const Mat& B, const Mat& Qw, const Mat& Rw, double tol, int max_iter) {
    const std::size_t n = A.rows, m = B.cols;
    if (A.cols != n || B.rows != n) throw DimensionError("lqr: A/B shape mismatch");
    if (Qw.rows != n || Qw.cols != n || Rw.rows != m || Rw.cols != m)
        throw DimensionError("lqr: weight shape mismatch");

    const Eigen::MatrixXd Ae = to_eigen(A), Be = to_eigen(B), Qe = to_eigen(Qw), Re = to_eigen(Rw);
    Eigen::LLT<Eigen::MatrixXd> Rllt(Re);
    if (Rllt.info() != Eigen::Success) throw NumericalError("lqr: R must be positive definite");

    // Bass seed: P0 solves (-A - eta I) P0 + P0 (-A - eta I)' = -2 B B'
    const double eta = 1.0 + Ae.norm();
    const Eigen::MatrixXd As = (-Ae - eta * Eigen::MatrixXd::Identity(n, n)).transpose();
    Eigen::MatrixXd P0;
    try {
        P0 = to_eigen(solve_lyapunov(from_eigen(As), from_eigen(2.0 * Be * Be.transpose())));
    } catch (const std::exception&) {
        throw NumericalError("lqr: not stabilizable (seed Lyapunov solve failed)");
    }
    Eigen::LLT<Eigen::MatrixXd> P0llt(P0);
    if (P0llt.info() != Eigen::Success)
        throw NumericalError("lqr: not stabilizable (seed Gramian not positive definite)");
    Eigen::MatrixXd K = -(P0llt.solve(Be)).transpose();  // -B' P0^{-1}

    if (!is_hurwitz(from_eigen(Ae + Be * K)).hurwitz)
        throw NumericalError("lqr: not stabilizable (seed gain does not stabilize)");

    LqrResult out;
    Eigen::MatrixXd P;
    for (int it = 0; it < max_iter; ++it) {
        const Eigen::MatrixXd Acl = Ae + Be * K;
        const Eigen::MatrixXd Qcl = Qe + K.transpose() * Re * K;
        P = to_eigen(solve_lyapunov(from_eigen(Acl), from_eigen(Qcl)));
        K = -Rllt.solve(Be.transpose() * P);
        out.iterations = it + 1;
        const double res = care_residual(A, B, Qw, Rw, from_eigen(P));
        out.residual_history.push_back(res);
        out.residual = res;
        if (res <= tol) {
            out.K = from_eigen(K);
            out.P = from_eigen(P);
            return out;
        }
    }
    throw NumericalError("lqr: Kleinman iteration did not converge within " +
                         std::to_string(max_iter) + " steps");
}

bool check_stabilizable(const Mat& A, const Mat& B) {
    try {
        LqrResult r = lqr(A, B, Mat::identity(A.rows), Mat::identity(B.cols));
        return is_hurwitz(A + B * r.K).hurwitz;
    } catch (const std::exception&) {
        return false;
    }
}

Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x0, double step) {
    const std::size_t n = x0.size();
    const std::size_t rows = f(x0).size();
    Mat J(rows, n);
    for (std::size_t j = 0; j < n; ++j) {
        Vec xp = x0, xm = x0;
        xp[j] += step;
        xm[j] -= step;
        const Vec fp = f(xp), fm = f(xm);
        for (std::size_t i = 0; i < rows; ++i) J(i, j) = (fp[i] - fm[i]) / (2.0 * step);
    }
    return J;
}

}  // namespace lesctl
