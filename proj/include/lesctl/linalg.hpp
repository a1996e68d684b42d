#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lesctl {

/// Thrown on any shape mismatch in Vec/Mat arithmetic.
class DimensionError : public std::runtime_error {
public:
    explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown when a linear-algebra routine cannot produce a valid result
/// (singular system, non-convergence, precondition violation).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

struct Vec {
    std::vector<double> data;

    Vec() = default;
    explicit Vec(std::size_t n, double fill = 0.0) : data(n, fill) {}
    Vec(std::initializer_list<double> xs) : data(xs) {}
    explicit Vec(std::vector<double> xs) : data(std::move(xs)) {}

    std::size_t size() const { return data.size(); }
    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    double norm() const {
        double s = 0.0;
        for (double x : data) s += x * x;
        return std::sqrt(s);
    }
};

/// Dense row-major matrix with explicit dimensions.
struct Mat {
    std::size_t rows = 0, cols = 0;
    std::vector<double> data;  // row-major, rows*cols

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
    Mat(std::size_t r, std::size_t c, std::initializer_list<double> xs) : rows(r), cols(c), data(xs) {
        if (data.size() != r * c) throw DimensionError("Mat init list size != rows*cols");
    }

    static Mat identity(std::size_t n) {
        Mat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
    static Mat diag(const Vec& d) {
        Mat m(d.size(), d.size());
        for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
        return m;
    }

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    Mat transpose() const {
        Mat t(cols, rows);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    double frobenius_norm() const {
        double s = 0.0;
        for (double x : data) s += x * x;
        return std::sqrt(s);
    }
};

inline void check_same_size(const Vec& a, const Vec& b, const char* op) {
    if (a.size() != b.size())
        throw DimensionError(std::string(op) + ": vector sizes " + std::to_string(a.size()) +
                             " vs " + std::to_string(b.size()));
}

inline Vec operator+(const Vec& a, const Vec& b) {
    check_same_size(a, b, "vec+vec");
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

inline Vec operator-(const Vec& a, const Vec& b) {
    check_same_size(a, b, "vec-vec");
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

inline Vec operator*(double s, const Vec& a) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = s * a[i];
    return r;
}

inline double dot(const Vec& a, const Vec& b) {
    check_same_size(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline Vec operator*(const Mat& A, const Vec& x) {
    if (A.cols != x.size())
        throw DimensionError("mat*vec: " + std::to_string(A.rows) + "x" + std::to_string(A.cols) +
                             " times " + std::to_string(x.size()));
    Vec r(A.rows);
    for (std::size_t i = 0; i < A.rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < A.cols; ++j) s += A(i, j) * x[j];
        r[i] = s;
    }
    return r;
}

inline Mat operator*(const Mat& A, const Mat& B) {
    if (A.cols != B.rows)
        throw DimensionError("mat*mat: " + std::to_string(A.rows) + "x" + std::to_string(A.cols) +
                             " times " + std::to_string(B.rows) + "x" + std::to_string(B.cols));
    Mat r(A.rows, B.cols);
    for (std::size_t i = 0; i < A.rows; ++i)
        for (std::size_t k = 0; k < A.cols; ++k) {
            const double aik = A(i, k);
            for (std::size_t j = 0; j < B.cols; ++j) r(i, j) += aik * B(k, j);
        }
    return r;
}

inline Mat operator+(const Mat& A, const Mat& B) {
    if (A.rows != B.rows || A.cols != B.cols) throw DimensionError("mat+mat shape mismatch");
    Mat r = A;
    for (std::size_t i = 0; i < r.data.size(); ++i) r.data[i] += B.data[i];
    return r;
}

inline Mat operator-(const Mat& A, const Mat& B) {
    if (A.rows != B.rows || A.cols != B.cols) throw DimensionError("mat-mat shape mismatch");
    Mat r = A;
    for (std::size_t i = 0; i < r.data.size(); ++i) r.data[i] -= B.data[i];
    return r;
}

inline Mat operator*(double s, const Mat& A) {
    Mat r = A;
    for (double& x : r.data) x *= s;
    return r;
}

inline bool all_finite(std::span<const double> xs) {
    for (double x : xs)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace lesctl
