#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "lesctl/linalg.hpp"
#include "lesctl/rng.hpp"

namespace lesctl::testing {

/// Central finite-difference gradient of a scalar function of a flat vector.
inline std::vector<double> central_fd_grad(const std::function<double(const std::vector<double>&)>& f,
                                           const std::vector<double>& x, double step = 1e-5) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        std::vector<double> xp = x, xm = x;
        xp[i] += step;
        xm[i] -= step;
        g[i] = (f(xp) - f(xm)) / (2.0 * step);
    }
    return g;
}

/// Componentwise mixed tolerance: relative where the magnitude is
/// measurable, absolute below the floor (the gradient-correctness contract;
/// finite differences cannot resolve relative error on ~1e-8 components).
inline bool grads_close(const std::vector<double>& a, const std::vector<double>& b, double rel_tol,
                        double abs_floor = 1e-8) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double mag = std::max(std::fabs(a[i]), std::fabs(b[i]));
        const double err = std::fabs(a[i] - b[i]);
        if (err > rel_tol * mag + abs_floor) return false;
    }
    return true;
}

/// Characteristic polynomial coefficients of A (monic, degree n) via the
/// Faddeev-LeVerrier recurrence: p(s) = s^n + c[1] s^{n-1} + ... + c[n].
inline std::vector<double> char_poly(const Mat& A) {
    const std::size_t n = A.rows;
    std::vector<double> c(n + 1, 0.0);
    c[0] = 1.0;
    Mat M = Mat::identity(n);
    for (std::size_t k = 1; k <= n; ++k) {
        M = A * M;
        double tr = 0.0;
        for (std::size_t i = 0; i < n; ++i) tr += M(i, i);
        c[k] = -tr / static_cast<double>(k);
        for (std::size_t i = 0; i < n; ++i) M(i, i) += c[k];
    }
    return c;
}

/// Routh-Hurwitz stability test on the characteristic polynomial; an
/// eigensolver-free oracle independent of the Lyapunov-based path.
inline bool routh_hurwitz_stable(const Mat& A) {
    std::vector<double> a = char_poly(A);  // a[0] = 1 (monic)
    const std::size_t n = A.rows;
    for (double coeff : a)
        if (!(coeff > 0.0)) return false;  // necessary: all coefficients positive

    // Routh table
    const std::size_t rows = n + 1;
    const std::size_t cols = (n + 2) / 2 + 1;
    std::vector<std::vector<double>> t(rows, std::vector<double>(cols, 0.0));
    for (std::size_t j = 0; j < cols; ++j) {
        if (2 * j < a.size()) t[0][j] = a[2 * j];
        if (2 * j + 1 < a.size()) t[1][j] = a[2 * j + 1];
    }
    for (std::size_t i = 2; i < rows; ++i) {
        const double piv = t[i - 1][0];
        if (piv == 0.0) return false;  // marginal or unstable
        for (std::size_t j = 0; j + 1 < cols; ++j)
            t[i][j] = (piv * t[i - 2][j + 1] - t[i - 2][0] * t[i - 1][j + 1]) / piv;
    }
    for (std::size_t i = 0; i < rows; ++i)
        if (!(t[i][0] > 0.0)) return false;
    return true;
}

/// Random Hurwitz matrix: -M M' - I plus a skew part.
inline Mat random_hurwitz(std::size_t n, Rng& rng) {
    Mat M(n, n), S(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) M(i, j) = rng.normal();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double s = rng.normal();
            S(i, j) = s;
            S(j, i) = -s;
        }
    Mat A = M * M.transpose();
    for (double& x : A.data) x = -x;
    for (std::size_t i = 0; i < n; ++i) A(i, i) -= 1.0;
    return A + S;
}

inline Mat random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
    Mat A(r, c);
    for (double& x : A.data) x = scale * rng.normal();
    return A;
}

}  // namespace lesctl::testing
