#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "lesctl/autodiff.hpp"
#include "lesctl/linalg.hpp"

namespace lesctl::nets {

/// Fully connected net: tanh on hidden layers, linear output layer.
/// Weight layout per layer: W (rows x cols, row-major), then bias (rows) if
/// `bias` is set. No biases anywhere when `bias` is false.
struct MlpSpec {
    int in = 0;
    std::vector<int> hidden;
    int out = 0;
    bool bias = true;

    int param_count() const {
        int n = 0, prev = in;
        for (int h : hidden) {
            n += h * prev + (bias ? h : 0);
            prev = h;
        }
        n += out * prev + (bias ? out : 0);
        return n;
    }

    std::vector<std::pair<int, int>> layer_dims() const {  // (rows, cols) per layer
        std::vector<std::pair<int, int>> dims;
        int prev = in;
        for (int h : hidden) {
            dims.emplace_back(h, prev);
            prev = h;
        }
        dims.emplace_back(out, prev);
        return dims;
    }
};

// y[r] = sum_j W[r,j] x[j], identical summation order on both scalar kinds.
inline std::vector<double> dense(std::span<const double> w, int rows, int cols,
                                 std::span<const double> x) {
    if (static_cast<int>(x.size()) != cols || static_cast<int>(w.size()) < rows * cols)
        throw DimensionError("dense: weight/input shape mismatch");
    std::vector<double> y(rows);
    for (int r = 0; r < rows; ++r) {
        double s = 0.0;
        for (int j = 0; j < cols; ++j) s += w[r * cols + j] * x[j];
        y[r] = s;
    }
    return y;
}

inline std::vector<ad::Var> dense(std::span<const ad::Var> w, int rows, int cols,
                                  std::span<const ad::Var> x) {
    if (static_cast<int>(x.size()) != cols || static_cast<int>(w.size()) < rows * cols)
        throw DimensionError("dense: weight/input shape mismatch");
    // one contiguization instead of per-row aux index lists
    const std::vector<ad::Var> xc = x[0].tape->contiguize(x);
    std::vector<ad::Var> y;
    y.reserve(rows);
    for (int r = 0; r < rows; ++r) y.push_back(x[0].tape->dot(w.subspan(r * cols, cols), xc));
    return y;
}

template <class S>
std::vector<S> mlp_forward(const MlpSpec& spec, std::span<const S> w, std::span<const S> x) {
    using std::tanh;
    if (static_cast<int>(x.size()) != spec.in)
        throw DimensionError("mlp_forward: input size != spec.in");
    if (static_cast<int>(w.size()) != spec.param_count())
        throw DimensionError("mlp_forward: weight count != spec.param_count()");

    std::vector<S> cur(x.begin(), x.end());
    std::size_t off = 0;
    const auto dims = spec.layer_dims();
    for (std::size_t l = 0; l < dims.size(); ++l) {
        const auto [rows, cols] = dims[l];
        std::vector<S> y = dense(w.subspan(off, rows * cols), rows, cols,
                                 std::span<const S>(cur));
        off += rows * cols;
        if (spec.bias) {
            for (int r = 0; r < rows; ++r) y[r] = y[r] + w[off + r];
            off += rows;
        }
        const bool last = (l + 1 == dims.size());
        if (!last)
            for (auto& v : y) v = tanh(v);
        cur = std::move(y);
    }
    return cur;
}

/// Single-layer LSTM with a linear readout. Weight layout: for each gate in
/// (input, forget, cell, output): Wx (H x in), Wh (H x H), b (H); then the
/// readout W (out x H) and bias (out).
struct LstmSpec {
    int in = 0;
    int hidden = 0;
    int out = 0;

    int param_count() const {
        return 4 * (hidden * in + hidden * hidden + hidden) + out * hidden + out;
    }
};

template <class S>
S sigmoid(S x) {
    using std::exp;
    return 1.0 / (1.0 + exp(-x));
}

/// Advances (h, c) one step on input x and returns the readout.
template <class S>
std::vector<S> lstm_step(const LstmSpec& spec, std::span<const S> w, std::span<const S> x,
                         std::vector<S>& h, std::vector<S>& c) {
    using std::tanh;
    const int H = spec.hidden;
    if (static_cast<int>(x.size()) != spec.in || static_cast<int>(h.size()) != H ||
        static_cast<int>(c.size()) != H)
        throw DimensionError("lstm_step: shape mismatch");
    if (static_cast<int>(w.size()) != spec.param_count())
        throw DimensionError("lstm_step: weight count != spec.param_count()");

    const int gate_sz = H * spec.in + H * H + H;
    auto gate = [&](int g, bool use_tanh) {
        std::size_t off = static_cast<std::size_t>(g) * gate_sz;
        std::vector<S> a = dense(w.subspan(off, H * spec.in), H, spec.in, x);
        off += H * spec.in;
        std::vector<S> b = dense(w.subspan(off, H * H), H, H, std::span<const S>(h));
        off += H * H;
        for (int r = 0; r < H; ++r) {
            a[r] = a[r] + b[r] + w[off + r];
            a[r] = use_tanh ? tanh(a[r]) : sigmoid(a[r]);
        }
        return a;
    };

    std::vector<S> gi = gate(0, false);
    std::vector<S> gf = gate(1, false);
    std::vector<S> gg = gate(2, true);
    std::vector<S> go = gate(3, false);

    for (int r = 0; r < H; ++r) {
        c[r] = gf[r] * c[r] + gi[r] * gg[r];
        h[r] = go[r] * tanh(c[r]);
    }

    std::size_t off = static_cast<std::size_t>(4) * gate_sz;
    std::vector<S> y = dense(w.subspan(off, spec.out * H), spec.out, H, std::span<const S>(h));
    off += spec.out * H;
    for (int r = 0; r < spec.out; ++r) y[r] = y[r] + w[off + r];
    return y;
}

}  // namespace lesctl::nets
