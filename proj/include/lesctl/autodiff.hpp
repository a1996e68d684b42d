#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lesctl/linalg.hpp"

namespace lesctl::ad {

enum class Op : std::uint8_t {
    Leaf,   // independent input (parameter or state); value set externally
    Const,  // embedded constant
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Tanh,
    Exp,
    Sin,
    Cos,
    Sqrt,
    Abs,    // exact |x|; derivative at 0 taken as 0
    Copy,   // identity; used to make vectors index-contiguous
    Dot,    // n-ary inner product over two index lists
    DotRR,  // inner product over two contiguous index ranges
};

inline const char* op_name(Op op) {
    switch (op) {
        case Op::Leaf: return "leaf";
        case Op::Const: return "const";
        case Op::Add: return "add";
        case Op::Sub: return "sub";
        case Op::Mul: return "mul";
        case Op::Div: return "div";
        case Op::Neg: return "neg";
        case Op::Tanh: return "tanh";
        case Op::Exp: return "exp";
        case Op::Sin: return "sin";
        case Op::Cos: return "cos";
        case Op::Sqrt: return "sqrt";
        case Op::Abs: return "abs";
        case Op::Copy: return "copy";
        case Op::Dot: return "dot";
        case Op::DotRR: return "dot_range";
    }
    return "?";
}

/// Raised when a recorded operation produces a non-finite value.
class NonFiniteError : public std::runtime_error {
public:
    NonFiniteError(Op op, std::size_t node)
        : std::runtime_error("non-finite value at tape node " + std::to_string(node) + " (" +
                             op_name(op) + ")"),
          op_(op),
          node_(node) {}
    Op op() const { return op_; }
    std::size_t node() const { return node_; }

private:
    Op op_;
    std::size_t node_;
};

class Tape;

/// Handle to one scalar on a tape.
struct Var {
    Tape* tape = nullptr;
    std::uint32_t idx = 0;

    double value() const;
};

class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var leaf(double v) { return Var{this, push(Op::Leaf, 0, 0, v)}; }

    std::vector<Var> leaves(std::span<const double> vs) {
        std::vector<Var> out;
        out.reserve(vs.size());
        for (double v : vs) out.push_back(leaf(v));
        return out;
    }

    Var constant(double v) { return Var{this, push(Op::Const, 0, 0, v)}; }

    Var unary(Op op, Var a) { return Var{this, push(op, a.idx, 0, eval_unary(op, val_[a.idx]))}; }

    Var binary(Op op, Var a, Var b) {
        return Var{this, push(op, a.idx, b.idx, eval_binary(op, val_[a.idx], val_[b.idx]))};
    }

    /// Inner product sum_i a[i]*b[i]; a and b may be any tape scalars. When
    /// both operands are index-contiguous the node stores only the two range
    /// starts instead of 2n aux indices.
    Var dot(std::span<const Var> a, std::span<const Var> b) {
        if (a.size() != b.size()) throw DimensionError("tape dot: length mismatch");
        const auto n = static_cast<std::uint32_t>(a.size());
        if (n == 0) return constant(0.0);
        if (contiguous(a) && contiguous(b)) {
            const auto off = static_cast<std::uint32_t>(aux_.size());
            aux_.push_back(a[0].idx);
            aux_.push_back(b[0].idx);
            const double s = eval_dot_rr(val_.data(), a[0].idx, b[0].idx, n);
            return Var{this, push(Op::DotRR, off, n, s)};
        }
        const auto off = static_cast<std::uint32_t>(aux_.size());
        aux_.reserve(aux_.size() + 2 * n);
        for (auto v : a) aux_.push_back(v.idx);
        for (auto v : b) aux_.push_back(v.idx);
        const double s = eval_dot(val_.data(), aux_.data() + off, n);
        return Var{this, push(Op::Dot, off, n, s)};
    }

    static bool contiguous(std::span<const Var> xs) {
        for (std::size_t i = 1; i < xs.size(); ++i)
            if (xs[i].idx != xs[0].idx + i) return false;
        return true;
    }

    /// Copies scalars into fresh consecutive nodes (identity derivatives).
    std::vector<Var> contiguize(std::span<const Var> xs) {
        if (contiguous(xs)) return {xs.begin(), xs.end()};
        std::vector<Var> out;
        out.reserve(xs.size());
        for (Var v : xs) out.push_back(unary(Op::Copy, v));
        return out;
    }

    std::size_t size() const { return val_.size(); }
    double value(std::uint32_t i) const { return val_[i]; }
    double adjoint(Var v) const { return adj_[v.idx]; }

    void set_leaf_value(Var v, double x) { val_[v.idx] = x; }

    /// Marks everything recorded so far (typically parameter leaves) as a
    /// persistent prefix that survives clear().
    void freeze_prefix() {
        prefix_ = val_.size();
        aux_prefix_ = aux_.size();
    }

    /// Drops all nodes after the frozen prefix. Prefix values and adjoints
    /// are kept, so parameter adjoints accumulate across sweeps.
    void clear() {
        ops_.resize(prefix_);
        pa_.resize(prefix_);
        pb_.resize(prefix_);
        val_.resize(prefix_);
        adj_.resize(prefix_);
        aux_.resize(aux_prefix_);
    }

    void zero_adjoints() { std::fill(adj_.begin(), adj_.end(), 0.0); }

    void seed(Var v, double a) { adj_[v.idx] += a; }

    /// Reverse sweep over the whole tape (each node visited exactly once,
    /// last to first).
    void reverse() {
        for (std::size_t i = val_.size(); i-- > 0;) {
            const double g = adj_[i];
            if (g == 0.0) continue;
            const Op op = static_cast<Op>(ops_[i]);
            switch (op) {
                case Op::Leaf:
                case Op::Const: break;
                case Op::Add:
                    adj_[pa_[i]] += g;
                    adj_[pb_[i]] += g;
                    break;
                case Op::Sub:
                    adj_[pa_[i]] += g;
                    adj_[pb_[i]] -= g;
                    break;
                case Op::Mul:
                    adj_[pa_[i]] += g * val_[pb_[i]];
                    adj_[pb_[i]] += g * val_[pa_[i]];
                    break;
                case Op::Div: {
                    const double inv_b = 1.0 / val_[pb_[i]];
                    adj_[pa_[i]] += g * inv_b;
                    adj_[pb_[i]] -= g * val_[i] * inv_b;
                    break;
                }
                case Op::Neg: adj_[pa_[i]] -= g; break;
                case Op::Tanh: adj_[pa_[i]] += g * (1.0 - val_[i] * val_[i]); break;
                case Op::Exp: adj_[pa_[i]] += g * val_[i]; break;
                case Op::Sin: adj_[pa_[i]] += g * std::cos(val_[pa_[i]]); break;
                case Op::Cos: adj_[pa_[i]] -= g * std::sin(val_[pa_[i]]); break;
                case Op::Sqrt: adj_[pa_[i]] += g * 0.5 / val_[i]; break;
                case Op::Abs: {
                    const double x = val_[pa_[i]];
                    if (x > 0.0)
                        adj_[pa_[i]] += g;
                    else if (x < 0.0)
                        adj_[pa_[i]] -= g;
                    // x == 0: subgradient 0
                    break;
                }
                case Op::Copy: adj_[pa_[i]] += g; break;
                case Op::Dot: {
                    const std::uint32_t off = pa_[i], n = pb_[i];
                    const std::uint32_t* a = aux_.data() + off;
                    const std::uint32_t* b = a + n;
                    for (std::uint32_t k = 0; k < n; ++k) {
                        adj_[a[k]] += g * val_[b[k]];
                        adj_[b[k]] += g * val_[a[k]];
                    }
                    break;
                }
                case Op::DotRR: {
                    const std::uint32_t a0 = aux_[pa_[i]], b0 = aux_[pa_[i] + 1], n = pb_[i];
                    for (std::uint32_t k = 0; k < n; ++k) {
                        adj_[a0 + k] += g * val_[b0 + k];
                        adj_[b0 + k] += g * val_[a0 + k];
                    }
                    break;
                }
            }
        }
    }

    /// Recomputes every non-leaf value from the leaves, in recording order.
    void replay() {
        for (std::size_t i = 0; i < val_.size(); ++i) {
            const Op op = static_cast<Op>(ops_[i]);
            switch (op) {
                case Op::Leaf:
                case Op::Const: break;
                case Op::Dot: val_[i] = eval_dot(val_.data(), aux_.data() + pa_[i], pb_[i]); break;
                case Op::DotRR:
                    val_[i] = eval_dot_rr(val_.data(), aux_[pa_[i]], aux_[pa_[i] + 1], pb_[i]);
                    break;
                case Op::Add:
                case Op::Sub:
                case Op::Mul:
                case Op::Div:
                    val_[i] = eval_binary(op, val_[pa_[i]], val_[pb_[i]]);
                    break;
                default: val_[i] = eval_unary(op, val_[pa_[i]]); break;
            }
        }
    }

private:
    static double eval_binary(Op op, double a, double b) {
        switch (op) {
            case Op::Add: return a + b;
            case Op::Sub: return a - b;
            case Op::Mul: return a * b;
            case Op::Div: return a / b;
            default: throw std::logic_error("eval_binary: bad op");
        }
    }

    static double eval_unary(Op op, double a) {
        switch (op) {
            case Op::Neg: return -a;
            case Op::Tanh: return std::tanh(a);
            case Op::Exp: return std::exp(a);
            case Op::Sin: return std::sin(a);
            case Op::Cos: return std::cos(a);
            case Op::Sqrt: return std::sqrt(a);
            case Op::Abs: return std::fabs(a);
            case Op::Copy: return a;
            default: throw std::logic_error("eval_unary: bad op");
        }
    }

    static double eval_dot(const double* vals, const std::uint32_t* aux, std::uint32_t n) {
        double s = 0.0;
        for (std::uint32_t k = 0; k < n; ++k) s += vals[aux[k]] * vals[aux[n + k]];
        return s;
    }

    static double eval_dot_rr(const double* vals, std::uint32_t a0, std::uint32_t b0,
                              std::uint32_t n) {
        double s = 0.0;
        for (std::uint32_t k = 0; k < n; ++k) s += vals[a0 + k] * vals[b0 + k];
        return s;
    }

    std::uint32_t push(Op op, std::uint32_t a, std::uint32_t b, double v) {
        if (!std::isfinite(v) && op != Op::Leaf && op != Op::Const)
            throw NonFiniteError(op, val_.size());
        ops_.push_back(static_cast<std::uint8_t>(op));
        pa_.push_back(a);
        pb_.push_back(b);
        val_.push_back(v);
        adj_.push_back(0.0);
        return static_cast<std::uint32_t>(val_.size() - 1);
    }

    std::vector<std::uint8_t> ops_;
    std::vector<std::uint32_t> pa_, pb_;
    std::vector<double> val_, adj_;
    std::vector<std::uint32_t> aux_;
    std::size_t prefix_ = 0;
    std::size_t aux_prefix_ = 0;
};

inline double Var::value() const { return tape->value(idx); }

inline Var operator+(Var a, Var b) { return a.tape->binary(Op::Add, a, b); }
inline Var operator-(Var a, Var b) { return a.tape->binary(Op::Sub, a, b); }
inline Var operator*(Var a, Var b) { return a.tape->binary(Op::Mul, a, b); }
inline Var operator/(Var a, Var b) { return a.tape->binary(Op::Div, a, b); }
inline Var operator-(Var a) { return a.tape->unary(Op::Neg, a); }

inline Var operator+(Var a, double b) { return a + a.tape->constant(b); }
inline Var operator+(double a, Var b) { return b.tape->constant(a) + b; }
inline Var operator-(Var a, double b) { return a - a.tape->constant(b); }
inline Var operator-(double a, Var b) { return b.tape->constant(a) - b; }
inline Var operator*(Var a, double b) { return a * a.tape->constant(b); }
inline Var operator*(double a, Var b) { return b.tape->constant(a) * b; }
inline Var operator/(Var a, double b) { return a / a.tape->constant(b); }
inline Var operator/(double a, Var b) { return b.tape->constant(a) / b; }

inline Var tanh(Var a) { return a.tape->unary(Op::Tanh, a); }
inline Var exp(Var a) { return a.tape->unary(Op::Exp, a); }
inline Var sin(Var a) { return a.tape->unary(Op::Sin, a); }
inline Var cos(Var a) { return a.tape->unary(Op::Cos, a); }
inline Var sqrt(Var a) { return a.tape->unary(Op::Sqrt, a); }
inline Var fabs(Var a) { return a.tape->unary(Op::Abs, a); }
inline Var abs(Var a) { return a.tape->unary(Op::Abs, a); }

struct GradResult {
    double value = 0.0;
    std::vector<double> gradient;
};

/// Records `loss` on a fresh tape with the entries of `p` as leaves and
/// returns the loss value together with d(loss)/dp.
template <class F>
GradResult grad(F&& loss, std::span<const double> p) {
    Tape tape;
    std::vector<Var> pv = tape.leaves(p);
    Var out = loss(tape, std::span<const Var>(pv));
    tape.seed(out, 1.0);
    tape.reverse();
    GradResult r;
    r.value = out.value();
    r.gradient.resize(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) r.gradient[i] = tape.adjoint(pv[i]);
    return r;
}

}  // namespace lesctl::ad

namespace lesctl {

struct ParamSlice {
    std::string name;
    std::size_t offset = 0;
    std::size_t len = 0;
};

/// Flat vector of learnable parameters with a named, contiguous slice layout.
class ParamStore {
public:
    std::size_t add_slice(std::string name, std::size_t len) {
        const std::size_t off = values_.size();
        layout_.push_back({std::move(name), off, len});
        values_.resize(off + len, 0.0);
        return off;
    }

    std::size_t size() const { return values_.size(); }

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    const std::vector<ParamSlice>& layout() const { return layout_; }

    const ParamSlice& slice_info(std::string_view name) const {
        for (const auto& s : layout_)
            if (s.name == name) return s;
        throw std::out_of_range("ParamStore: no slice named " + std::string(name));
    }

    std::span<double> slice(std::string_view name) {
        const auto& s = slice_info(name);
        return {values_.data() + s.offset, s.len};
    }
    std::span<const double> slice(std::string_view name) const {
        const auto& s = slice_info(name);
        return {values_.data() + s.offset, s.len};
    }

    /// Slices are allocated back to back, so they are disjoint and cover
    /// [0, size()) exactly; this re-checks the bookkeeping.
    bool layout_consistent() const {
        std::size_t expect = 0;
        for (const auto& s : layout_) {
            if (s.offset != expect) return false;
            expect += s.len;
        }
        return expect == values_.size();
    }

    /// Views an external array (e.g. tape leaves) through this layout.
    template <class T>
    std::span<const T> slice_of(std::span<const T> external, std::string_view name) const {
        const auto& s = slice_info(name);
        if (external.size() != values_.size())
            throw DimensionError("ParamStore::slice_of: external size mismatch");
        return external.subspan(s.offset, s.len);
    }

private:
    std::vector<double> values_;
    std::vector<ParamSlice> layout_;
};

}  // namespace lesctl
