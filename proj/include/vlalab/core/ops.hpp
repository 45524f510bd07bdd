#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <vector>

#include "vlalab/core/tensor.hpp"

namespace vlalab::core {

// ---------------------------------------------------------------------------
// raw GEMM kernels. Accumulate into C; caller zeroes first. Parallel variants
// assign whole output rows (or whole batch elements) to one thread, so
// results are bit-identical for any thread count.
// ---------------------------------------------------------------------------

template <class S>
inline void gemm_nn_serial(int64_t m, int64_t n, int64_t k, const S* __restrict a, const S* __restrict b,
                           S* __restrict c) {
    for (int64_t i = 0; i < m; ++i) {
        S* __restrict crow = c + i * n;
        const S* arow = a + i * k;
        int64_t p = 0;
        for (; p + 4 <= k; p += 4) {
            S a0 = arow[p], a1 = arow[p + 1], a2 = arow[p + 2], a3 = arow[p + 3];
            const S* b0 = b + p * n;
            const S* b1 = b0 + n;
            const S* b2 = b1 + n;
            const S* b3 = b2 + n;
            for (int64_t j = 0; j < n; ++j) crow[j] += a0 * b0[j] + a1 * b1[j] + a2 * b2[j] + a3 * b3[j];
        }
        for (; p < k; ++p) {
            S av = arow[p];
            const S* brow = b + p * n;
            for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C[m,n] += A[m,k] * B[n,k]^T
template <class S>
inline void gemm_nt_serial(int64_t m, int64_t n, int64_t k, const S* __restrict a, const S* __restrict b,
                           S* __restrict c) {
    for (int64_t i = 0; i < m; ++i) {
        const S* arow = a + i * k;
        S* crow = c + i * n;
        for (int64_t j = 0; j < n; ++j) {
            const S* brow = b + j * k;
            S acc = 0;
            for (int64_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
            crow[j] += acc;
        }
    }
}

// C[m,n] += A[k,m]^T * B[k,n]
template <class S>
inline void gemm_tn_serial(int64_t m, int64_t n, int64_t k, const S* __restrict a, const S* __restrict b,
                           S* __restrict c) {
    for (int64_t i = 0; i < m; ++i) {
        S* crow = c + i * n;
        for (int64_t p = 0; p < k; ++p) {
            S av = a[p * m + i];
            const S* brow = b + p * n;
            for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

template <class S>
void gemm_nn(int64_t m, int64_t n, int64_t k, const S* a, const S* b, S* c) {
    if (m * n * k > (1 << 16)) {
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < m; ++i) gemm_nn_serial(1, n, k, a + i * k, b, c + i * n);
        return;
#endif
    }
    gemm_nn_serial(m, n, k, a, b, c);
}

template <class S>
void gemm_nt(int64_t m, int64_t n, int64_t k, const S* a, const S* b, S* c) {
    if (m * n * k > (1 << 16)) {
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < m; ++i) gemm_nt_serial(1, n, k, a + i * k, b, c + i * n);
        return;
#endif
    }
    gemm_nt_serial(m, n, k, a, b, c);
}

template <class S>
void gemm_tn(int64_t m, int64_t n, int64_t k, const S* a, const S* b, S* c) {
#if defined(_OPENMP)
    if (m * n * k > (1 << 16)) {
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < m; ++i) {
            S* crow = c + i * n;
            for (int64_t p = 0; p < k; ++p) {
                S av = a[p * m + i];
                const S* brow = b + p * n;
                for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
            }
        }
        return;
    }
#endif
    gemm_tn_serial(m, n, k, a, b, c);
}

// ---------------------------------------------------------------------------
// broadcasting helpers
// ---------------------------------------------------------------------------

namespace detail {

inline Shape broadcast_shape(const Shape& a, const Shape& b, const char* op) {
    size_t nd = std::max(a.size(), b.size());
    Shape out(nd, 1);
    for (size_t i = 0; i < nd; ++i) {
        int64_t da = i < nd - a.size() ? 1 : a[i - (nd - a.size())];
        int64_t db = i < nd - b.size() ? 1 : b[i - (nd - b.size())];
        if (da != db && da != 1 && db != 1)
            throw std::invalid_argument(std::string(op) + ": shapes " + shape_str(a) + " and " + shape_str(b) +
                                        " are not broadcastable");
        out[i] = std::max(da, db);
    }
    return out;
}

// true when `in` equals the trailing dims of `out` (after stripping leading 1s),
// so in-index = out-index % in-numel
inline bool is_suffix(const Shape& in, const Shape& out) {
    size_t start = 0;
    while (start < in.size() && in[start] == 1) ++start;
    size_t nin = in.size() - start;
    if (nin > out.size()) return false;
    for (size_t i = 0; i < nin; ++i)
        if (in[start + i] != out[out.size() - nin + i]) return false;
    return true;
}

// strides into `in` for each axis of `out` (0 where broadcast)
inline std::vector<int64_t> broadcast_strides(const Shape& in, const Shape& out) {
    std::vector<int64_t> strides(out.size(), 0);
    int64_t s = 1;
    std::vector<int64_t> in_strides(in.size());
    for (int i = static_cast<int>(in.size()) - 1; i >= 0; --i) {
        in_strides[static_cast<size_t>(i)] = s;
        s *= in[static_cast<size_t>(i)];
    }
    size_t off = out.size() - in.size();
    for (size_t i = 0; i < in.size(); ++i)
        if (in[i] != 1) strides[off + i] = in_strides[i];
    return strides;
}

// walks out-indices, yielding the linear source index for a broadcast input
struct BroadcastIter {
    const Shape& out;
    std::vector<int64_t> strides;
    std::vector<int64_t> idx;
    int64_t lin = 0;

    BroadcastIter(const Shape& out_shape, const Shape& in_shape)
        : out(out_shape), strides(broadcast_strides(in_shape, out_shape)), idx(out_shape.size(), 0) {}

    int64_t operator*() const { return lin; }

    void advance() {
        for (int i = static_cast<int>(out.size()) - 1; i >= 0; --i) {
            size_t ui = static_cast<size_t>(i);
            idx[ui]++;
            lin += strides[ui];
            if (idx[ui] < out[ui]) return;
            lin -= strides[ui] * out[ui];
            idx[ui] = 0;
        }
    }
};

template <class S>
void wire1(TensorT<S>& out, const TensorT<S>& a, std::function<void()> fn) {
    if (!a.requires_grad()) return;
    out.d->requires_grad = true;
    out.d->is_leaf = false;
    out.d->parents = {a.d};
    out.d->backprop = std::move(fn);
}

template <class S>
void wire2(TensorT<S>& out, const TensorT<S>& a, const TensorT<S>& b, std::function<void()> fn) {
    if (!a.requires_grad() && !b.requires_grad()) return;
    out.d->requires_grad = true;
    out.d->is_leaf = false;
    out.d->parents = {a.d, b.d};
    out.d->backprop = std::move(fn);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// elementwise binary ops with broadcasting
// ---------------------------------------------------------------------------

namespace detail {

enum class BinOp { Add, Sub, Mul };

template <class S>
TensorT<S> binary(const TensorT<S>& a, const TensorT<S>& b, BinOp op, const char* opname) {
    Shape os = broadcast_shape(a.shape(), b.shape(), opname);
    TensorT<S> out = TensorT<S>::zeros(os);
    int64_t n = out.numel();
    const S* pa = a.data();
    const S* pb = b.data();
    S* po = out.data();

    auto apply = [op](S x, S y) -> S {
        switch (op) {
            case BinOp::Add: return x + y;
            case BinOp::Sub: return x - y;
            default: return x * y;
        }
    };

    bool same = a.shape() == os && b.shape() == os;
    bool b_suffix = a.shape() == os && is_suffix(b.shape(), os);
    if (same) {
        for (int64_t i = 0; i < n; ++i) po[i] = apply(pa[i], pb[i]);
    } else if (b_suffix) {
        int64_t bn = b.numel();
        for (int64_t i = 0; i < n; ++i) po[i] = apply(pa[i], pb[i % bn]);
    } else {
        BroadcastIter ia(os, a.shape()), ib(os, b.shape());
        for (int64_t i = 0; i < n; ++i, ia.advance(), ib.advance()) po[i] = apply(pa[*ia], pb[*ib]);
    }

    bool rg = a.requires_grad() || b.requires_grad();
    if (!rg) return out;
    auto* od = out.d.get();
    auto* ad = a.d.get();
    auto* bd = b.d.get();
    Shape osc = os;
    detail::wire2(out, a, b, [od, ad, bd, op, osc]() {
        const std::vector<S>& g = od->grad;
        int64_t n = od->numel();
        auto accum = [&](TensorData<S>* t, bool negate, bool times_other, TensorData<S>* other) {
            if (!t->requires_grad) return;
            std::vector<S>& tg = t->grad_buf();
            if (t->shape == osc) {
                if (!times_other) {
                    for (int64_t i = 0; i < n; ++i) tg[i] += negate ? -g[i] : g[i];
                } else {
                    BroadcastIter io(osc, other->shape);
                    for (int64_t i = 0; i < n; ++i, io.advance()) tg[i] += g[i] * other->value[*io];
                }
            } else {
                BroadcastIter it(osc, t->shape);
                if (!times_other) {
                    for (int64_t i = 0; i < n; ++i, it.advance()) tg[*it] += negate ? -g[i] : g[i];
                } else {
                    BroadcastIter io(osc, other->shape);
                    for (int64_t i = 0; i < n; ++i, it.advance(), io.advance()) tg[*it] += g[i] * other->value[*io];
                }
            }
        };
        switch (op) {
            case BinOp::Add:
                accum(ad, false, false, nullptr);
                accum(bd, false, false, nullptr);
                break;
            case BinOp::Sub:
                accum(ad, false, false, nullptr);
                accum(bd, true, false, nullptr);
                break;
            case BinOp::Mul:
                accum(ad, false, true, bd);
                accum(bd, false, true, ad);
                break;
        }
    });
    return out;
}

}  // namespace detail

template <class S>
TensorT<S> add(const TensorT<S>& a, const TensorT<S>& b) {
    return detail::binary(a, b, detail::BinOp::Add, "add");
}
template <class S>
TensorT<S> sub(const TensorT<S>& a, const TensorT<S>& b) {
    return detail::binary(a, b, detail::BinOp::Sub, "sub");
}
template <class S>
TensorT<S> mul(const TensorT<S>& a, const TensorT<S>& b) {
    return detail::binary(a, b, detail::BinOp::Mul, "mul");
}

template <class S>
TensorT<S> scale(const TensorT<S>& a, double s) {
    TensorT<S> out = TensorT<S>::zeros(a.shape());
    int64_t n = a.numel();
    for (int64_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] * static_cast<S>(s);
    auto* od = out.d.get();
    auto* ad = a.d.get();
    detail::wire1(out, a, [od, ad, s]() {
        std::vector<S>& tg = ad->grad_buf();
        for (int64_t i = 0; i < od->numel(); ++i) tg[i] += od->grad[i] * static_cast<S>(s);
    });
    return out;
}

template <class S>
TensorT<S> add_scalar(const TensorT<S>& a, double s) {
    TensorT<S> out = TensorT<S>::zeros(a.shape());
    for (int64_t i = 0; i < a.numel(); ++i) out.data()[i] = a.data()[i] + static_cast<S>(s);
    auto* od = out.d.get();
    auto* ad = a.d.get();
    detail::wire1(out, a, [od, ad]() {
        std::vector<S>& tg = ad->grad_buf();
        for (int64_t i = 0; i < od->numel(); ++i) tg[i] += od->grad[i];
    });
    return out;
}

template <class S>
TensorT<S> neg(const TensorT<S>& a) {
    return scale(a, -1.0);
}

// ---------------------------------------------------------------------------
// matmul: a is [..., m, k]; b is either [k, n] or batched with identical
// leading dims. Leading dims of `a` collapse to rows when b is 2-d.
// ---------------------------------------------------------------------------

template <class S>
TensorT<S> matmul(const TensorT<S>& a, const TensorT<S>& b) {
    if (a.ndim() < 2 || b.ndim() < 2)
        throw std::invalid_argument("matmul: need >=2-d operands, got " + shape_str(a.shape()) + " x " +
                                    shape_str(b.shape()));
    int64_t k = a.dim(-1);
    int64_t m = a.dim(-2);
    if (b.ndim() == 2) {
        if (b.dim(0) != k)
            throw std::invalid_argument("matmul: inner dims differ, " + shape_str(a.shape()) + " x " +
                                        shape_str(b.shape()));
        int64_t n = b.dim(1);
        int64_t rows = a.numel() / k;
        Shape os(a.shape().begin(), a.shape().end() - 1);
        os.push_back(n);
        TensorT<S> out = TensorT<S>::zeros(os);
        gemm_nn(rows, n, k, a.data(), b.data(), out.data());
        auto* od = out.d.get();
        auto* ad = a.d.get();
        auto* bd = b.d.get();
        detail::wire2(out, a, b, [od, ad, bd, rows, n, k]() {
            if (ad->requires_grad) gemm_nt(rows, k, n, od->grad.data(), bd->value.data(), ad->grad_buf().data());
            if (bd->requires_grad) gemm_tn(k, n, rows, ad->value.data(), od->grad.data(), bd->grad_buf().data());
        });
        return out;
    }
    if (a.ndim() != b.ndim())
        throw std::invalid_argument("matmul: rank mismatch, " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
    for (int i = 0; i < a.ndim() - 2; ++i)
        if (a.dim(i) != b.dim(i))
            throw std::invalid_argument("matmul: batch dims differ, " + shape_str(a.shape()) + " x " +
                                        shape_str(b.shape()));
    if (b.dim(-2) != k)
        throw std::invalid_argument("matmul: inner dims differ, " + shape_str(a.shape()) + " x " +
                                    shape_str(b.shape()));
    int64_t n = b.dim(-1);
    int64_t batch = a.numel() / (m * k);
    Shape os(a.shape().begin(), a.shape().end() - 2);
    os.push_back(m);
    os.push_back(n);
    TensorT<S> out = TensorT<S>::zeros(os);
    // one batch element per thread; tiny per-head gemms stay out of the omp runtime
#if defined(_OPENMP)
#pragma omp parallel for schedule(static) if (batch > 1 && batch * m * n * k > (1 << 15))
#endif
    for (int64_t bi = 0; bi < batch; ++bi)
        gemm_nn_serial(m, n, k, a.data() + bi * m * k, b.data() + bi * k * n, out.data() + bi * m * n);
    auto* od = out.d.get();
    auto* ad = a.d.get();
    auto* bd = b.d.get();
    detail::wire2(out, a, b, [od, ad, bd, batch, m, n, k]() {
        S* ag = ad->requires_grad ? ad->grad_buf().data() : nullptr;
        S* bg = bd->requires_grad ? bd->grad_buf().data() : nullptr;
#if defined(_OPENMP)
#pragma omp parallel for schedule(static) if (batch > 1 && batch * m * n * k > (1 << 15))
#endif
        for (int64_t bi = 0; bi < batch; ++bi) {
            const S* g = od->grad.data() + bi * m * n;
            if (ag) gemm_nt_serial(m, k, n, g, bd->value.data() + bi * k * n, ag + bi * m * k);
            if (bg) gemm_tn_serial(k, n, m, ad->value.data() + bi * m * k, g, bg + bi * k * n);
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// shape ops
// ---------------------------------------------------------------------------

template <class S>
TensorT<S> reshape(const TensorT<S>& a, Shape shape) {
    if (shape_numel(shape) != a.numel())
        throw std::invalid_argument("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
    TensorT<S> out = TensorT<S>::from(std::move(shape), a.values());
    auto* od = out.d.get();
    auto* ad = a.d.get();
    detail::wire1(out, a, [od, ad]() {
        std::vector<S>& tg = ad->grad_buf();
        for (int64_t i = 0; i < od->numel(); ++i) tg[i] += od->grad[i];
    });
    return out;
}

namespace detail {

// Iterates a permuted view as up to four outer dims (d0 slowest) plus a
// contiguous trailing block (the suffix of perm already in input order).
// Covers every rank <= 4 plus higher ranks with an identity tail.
struct TransposePlan {
    int64_t d[4] = {1, 1, 1, 1};
    int64_t s[4] = {0, 0, 0, 0};
    int64_t block = 1;
    bool viable = false;
};

inline TransposePlan make_transpose_plan(const Shape& in_shape, const std::vector<int>& perm) {
    int nd = static_cast<int>(perm.size());
    std::vector<int64_t> in_strides(static_cast<size_t>(nd), 1);
    for (int i = nd - 2; i >= 0; --i)
        in_strides[static_cast<size_t>(i)] = in_strides[static_cast<size_t>(i + 1)] * in_shape[static_cast<size_t>(i + 1)];

    int tail = nd;
    int64_t block = 1;
    while (tail > 0 && perm[static_cast<size_t>(tail - 1)] == tail - 1) {
        --tail;
        block *= in_shape[static_cast<size_t>(tail)];
    }
    TransposePlan plan;
    plan.block = block;
    if (tail > 4) return plan;
    for (int i = 0; i < tail; ++i) {
        plan.d[4 - tail + i] = in_shape[static_cast<size_t>(perm[static_cast<size_t>(i)])];
        plan.s[4 - tail + i] = in_strides[static_cast<size_t>(perm[static_cast<size_t>(i)])];
    }
    plan.viable = true;
    return plan;
}

template <class S, class Body>
inline void walk_transpose(const TransposePlan& p, Body&& body) {
    for (int64_t i0 = 0; i0 < p.d[0]; ++i0)
        for (int64_t i1 = 0; i1 < p.d[1]; ++i1)
            for (int64_t i2 = 0; i2 < p.d[2]; ++i2) {
                int64_t base = i0 * p.s[0] + i1 * p.s[1] + i2 * p.s[2];
                for (int64_t i3 = 0; i3 < p.d[3]; ++i3) body(base + i3 * p.s[3]);
            }
}

}  // namespace detail

// permutes axes; default swaps the last two
template <class S>
TensorT<S> transpose(const TensorT<S>& a, std::vector<int> perm = {}) {
    int nd = a.ndim();
    if (perm.empty()) {
        perm.resize(static_cast<size_t>(nd));
        for (int i = 0; i < nd; ++i) perm[static_cast<size_t>(i)] = i;
        if (nd >= 2) std::swap(perm[static_cast<size_t>(nd - 2)], perm[static_cast<size_t>(nd - 1)]);
    }
    if (static_cast<int>(perm.size()) != nd)
        throw std::invalid_argument("transpose: perm size " + std::to_string(perm.size()) + " vs ndim " +
                                    std::to_string(nd));
    Shape os(static_cast<size_t>(nd));
    for (int i = 0; i < nd; ++i) os[static_cast<size_t>(i)] = a.dim(perm[static_cast<size_t>(i)]);

    detail::TransposePlan plan = detail::make_transpose_plan(a.shape(), perm);
    if (!plan.viable)
        throw std::invalid_argument("transpose: rank " + std::to_string(nd) + " with permuted tail is unsupported");

    TensorT<S> out = TensorT<S>::zeros(os);
    {
        S* dst = out.data();
        const S* src = a.data();
        if (plan.block == 1) {
            detail::walk_transpose<S>(plan, [&](int64_t ofs) { *dst++ = src[ofs]; });
        } else if (plan.block >= 8) {
            size_t bytes = static_cast<size_t>(plan.block) * sizeof(S);
            detail::walk_transpose<S>(plan, [&](int64_t ofs) {
                std::memcpy(dst, src + ofs, bytes);
                dst += plan.block;
            });
        } else {
            detail::walk_transpose<S>(plan, [&](int64_t ofs) {
                const S* cell = src + ofs;
                for (int64_t b = 0; b < plan.block; ++b) *dst++ = cell[b];
            });
        }
    }

    auto* od = out.d.get();
    auto* ad = a.d.get();
    detail::wire1(out, a, [od, ad, plan]() {
        S* tg = ad->grad_buf().data();
        const S* g = od->grad.data();
        detail::walk_transpose<S>(plan, [&](int64_t ofs) {
            S* cell = tg + ofs;
            for (int64_t b = 0; b < plan.block; ++b) cell[b] += *g++;
        });
    });
    return out;
}

template <class S>
TensorT<S> concat(const std::vector<TensorT<S>>& xs, int axis) {
    if (xs.empty()) throw std::invalid_argument("concat: empty input list");
    int nd = xs[0].ndim();
    if (axis < 0) axis += nd;
    int64_t ax_total = 0;
    for (const auto& x : xs) {
        if (x.ndim() != nd) throw std::invalid_argument("concat: rank mismatch");
        for (int i = 0; i < nd; ++i)
            if (i != axis && x.dim(i) != xs[0].dim(i))
                throw std::invalid_argument("concat: shape mismatch " + shape_str(x.shape()) + " vs " +
                                            shape_str(xs[0].shape()));
        ax_total += x.dim(axis);
    }
    Shape os = xs[0].shape();
    os[static_cast<size_t>(axis)] = ax_total;
    TensorT<S> out = TensorT<S>::zeros(os);

    int64_t outer = 1;
    for (int i = 0; i < axis; ++i) outer *= os[static_cast<size_t>(i)];
    int64_t inner = 1;
    for (int i = axis + 1; i < nd; ++i) inner *= os[static_cast<size_t>(i)];

    int64_t off = 0;
    for (const auto& x : xs) {
        int64_t ax = x.dim(axis);
        for (int64_t o = 0; o < outer; ++o)
            std::memcpy(out.data() + (o * ax_total + off) * inner, x.data() + o * ax * inner,
                        static_cast<size_t>(ax * inner) * sizeof(S));
        off += ax;
    }

    bool rg = false;
    for (const auto& x : xs) rg = rg || x.requires_grad();
    if (!rg) return out;
    out.d->requires_grad = true;
    out.d->is_leaf = false;
    std::vector<TensorData<S>*> parents;
    for (const auto& x : xs) {
        out.d->parents.push_back(x.d);
        parents.push_back(x.d.get());
    }
    auto* od = out.d.get();
    out.d->backprop = [od, parents, outer, inner, ax_total, axis]() {
        int64_t off = 0;
        for (auto* p : parents) {
            int64_t ax = p->shape[static_cast<size_t>(axis)];
            if (p->requires_grad) {
                std::vector<S>& tg = p->grad_buf();
                for (int64_t o = 0; o < outer; ++o) {
                    const S* g = od->grad.data() + (o * ax_total + off) * inner;
                    S* t = tg.data() + o * ax * inner;
                    for (int64_t i = 0; i < ax * inner; ++i) t[i] += g[i];
                }
            }
            off += ax;
        }
    };
    return out;
}

template <class S>
TensorT<S> slice(const TensorT<S>& a, int axis, int64_t start, int64_t len) {
    int nd = a.ndim();
    if (axis < 0) axis += nd;
    if (start < 0 || len < 0 || start + len > a.dim(axis))
        throw std::invalid_argument("slice: range [" + std::to_string(start) + "," + std::to_string(start + len) +
                                    ") out of bounds for axis " + std::to_string(axis) + " of " + shape_str(a.shape()));
    Shape os = a.shape();
    os[static_cast<size_t>(axis)] = len;
    TensorT<S> out = TensorT<S>::zeros(os);
    int64_t outer = 1;
    for (int i = 0; i < axis; ++i) outer *= a.dim(i);
    int64_t inner = 1;
    for (int i = axis + 1; i < nd; ++i) inner *= a.dim(i);
    int64_t ax = a.dim(axis);
    for (int64_t o = 0; o < outer; ++o)
        std::memcpy(out.data() + o * len * inner, a.data() + (o * ax + start) * inner,
                    static_cast<size_t>(len * inner) * sizeof(S));
    auto* od = out.d.get();
    auto* ad = a.d.get();
    detail::wire1(out, a, [od, ad, outer, inner, ax, start, len]() {
        std::vector<S>& tg = ad->grad_buf();
        for (int64_t o = 0; o < outer; ++o) {
            const S* g = od->grad.data() + o * len * inner;
            S* t = tg.data() + (o * ax + start) * inner;
            for (int64_t i = 0; i < len * inner; ++i) t[i] += g[i];
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// activations
// ---------------------------------------------------------------------------

// tanh-form GELU; the backward reuses the stored tanh value, no libm calls
template <class S>
TensorT<S> gelu(const TensorT<S>& a) {
    constexpr S kC = S(0.7978845608028654);  // sqrt(2/pi)
    constexpr S kCube = S(0.044715);
    TensorT<S> out = TensorT<S>::zeros(a.shape());
    int64_t n = a.numel();
    auto th = std::make_shared<std::vector<S>>(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) {
        S x = a.data()[i];
        S t = std::tanh(kC * (x + kCube * x * x * x));
        (*th)[static_cast<size_t>(i)] = t;
        out.data()[i] = S(0.5) * x * (S(1) + t);
    }
    auto* od = out.d.get();
    auto* ad = a.d.get();
    detail::wire1(out, a, [od, ad, th]() {
        std::vector<S>& tg = ad->grad_buf();
        for (int64_t i = 0; i < od->numel(); ++i) {
            S x = ad->value[i];
            S t = (*th)[static_cast<size_t>(i)];
            S dg = kC * (S(1) + S(3) * kCube * x * x);
            tg[i] += od->grad[i] * (S(0.5) * (S(1) + t) + S(0.5) * x * (S(1) - t * t) * dg);
        }
    });
    return out;
}

template <class S>
TensorT<S> tanh_op(const TensorT<S>& a) {
    TensorT<S> out = TensorT<S>::zeros(a.shape());
    for (int64_t i = 0; i < a.numel(); ++i) out.data()[i] = std::tanh(a.data()[i]);
    auto* od = out.d.get();
    auto* ad = a.d.get();
    detail::wire1(out, a, [od, ad]() {
        std::vector<S>& tg = ad->grad_buf();
        for (int64_t i = 0; i < od->numel(); ++i) {
            S y = od->value[i];
            tg[i] += od->grad[i] * (S(1) - y * y);
        }
    });
    return out;
}

template <class S>
TensorT<S> sigmoid(const TensorT<S>& a) {
    TensorT<S> out = TensorT<S>::zeros(a.shape());
    for (int64_t i = 0; i < a.numel(); ++i) {
        S x = a.data()[i];
        out.data()[i] = S(1) / (S(1) + std::exp(-x));
    }
    auto* od = out.d.get();
    auto* ad = a.d.get();
    detail::wire1(out, a, [od, ad]() {
        std::vector<S>& tg = ad->grad_buf();
        for (int64_t i = 0; i < od->numel(); ++i) {
            S y = od->value[i];
            tg[i] += od->grad[i] * y * (S(1) - y);
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// softmax over the last axis. Rows whose entries are all -inf come out as
// all-zero rather than NaN.
// ---------------------------------------------------------------------------

template <class S>
TensorT<S> softmax(const TensorT<S>& a) {
    if (a.ndim() < 1) throw std::invalid_argument("softmax: scalar input");
    int64_t k = a.dim(-1);
    int64_t rows = a.numel() / k;
    TensorT<S> out = TensorT<S>::zeros(a.shape());
    for (int64_t r = 0; r < rows; ++r) {
        const S* x = a.data() + r * k;
        S* y = out.data() + r * k;
        S mx = x[0];
        for (int64_t i = 1; i < k; ++i) mx = std::max(mx, x[i]);
        if (!(mx > -std::numeric_limits<S>::infinity())) continue;  // fully masked row
        double sum = 0;
        for (int64_t i = 0; i < k; ++i) {
            S e = std::exp(x[i] - mx);
            y[i] = e;
            sum += e;
        }
        S inv = static_cast<S>(1.0 / sum);
        for (int64_t i = 0; i < k; ++i) y[i] *= inv;
    }
    auto* od = out.d.get();
    auto* ad = a.d.get();
    detail::wire1(out, a, [od, ad, rows, k]() {
        std::vector<S>& tg = ad->grad_buf();
        for (int64_t r = 0; r < rows; ++r) {
            const S* y = od->value.data() + r * k;
            const S* g = od->grad.data() + r * k;
            S* t = tg.data() + r * k;
            double dot = 0;
            for (int64_t i = 0; i < k; ++i) dot += static_cast<double>(g[i]) * y[i];
            for (int64_t i = 0; i < k; ++i) t[i] += y[i] * (g[i] - static_cast<S>(dot));
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// layer norm over the last axis with affine parameters
// ---------------------------------------------------------------------------

template <class S>
TensorT<S> layer_norm(const TensorT<S>& a, const TensorT<S>& gamma, const TensorT<S>& beta, double eps = 1e-5) {
    int64_t dcount = a.dim(-1);
    if (gamma.numel() != dcount || beta.numel() != dcount)
        throw std::invalid_argument("layer_norm: affine params " + shape_str(gamma.shape()) + "/" +
                                    shape_str(beta.shape()) + " do not match feature dim of " + shape_str(a.shape()));
    int64_t rows = a.numel() / dcount;
    TensorT<S> out = TensorT<S>::zeros(a.shape());
    auto xhat = std::make_shared<std::vector<S>>(static_cast<size_t>(a.numel()));
    auto rstd = std::make_shared<std::vector<S>>(static_cast<size_t>(rows));
    for (int64_t r = 0; r < rows; ++r) {
        const S* x = a.data() + r * dcount;
        double mu = 0;
        for (int64_t i = 0; i < dcount; ++i) mu += x[i];
        mu /= static_cast<double>(dcount);
        double var = 0;
        for (int64_t i = 0; i < dcount; ++i) {
            double dv = x[i] - mu;
            var += dv * dv;
        }
        var /= static_cast<double>(dcount);
        double rs = 1.0 / std::sqrt(var + eps);
        (*rstd)[static_cast<size_t>(r)] = static_cast<S>(rs);
        S* xh = xhat->data() + r * dcount;
        S* y = out.data() + r * dcount;
        for (int64_t i = 0; i < dcount; ++i) {
            xh[i] = static_cast<S>((x[i] - mu) * rs);
            y[i] = xh[i] * gamma.data()[i] + beta.data()[i];
        }
    }
    bool rg = a.requires_grad() || gamma.requires_grad() || beta.requires_grad();
    if (!rg) return out;
    out.d->requires_grad = true;
    out.d->is_leaf = false;
    out.d->parents = {a.d, gamma.d, beta.d};
    auto* od = out.d.get();
    auto* ad = a.d.get();
    auto* gd = gamma.d.get();
    auto* bd = beta.d.get();
    out.d->backprop = [od, ad, gd, bd, xhat, rstd, rows, dcount]() {
        for (int64_t r = 0; r < rows; ++r) {
            const S* g = od->grad.data() + r * dcount;
            const S* xh = xhat->data() + r * dcount;
            if (gd->requires_grad) {
                std::vector<S>& gg = gd->grad_buf();
                for (int64_t i = 0; i < dcount; ++i) gg[i] += g[i] * xh[i];
            }
            if (bd->requires_grad) {
                std::vector<S>& bg = bd->grad_buf();
                for (int64_t i = 0; i < dcount; ++i) bg[i] += g[i];
            }
            if (ad->requires_grad) {
                std::vector<S>& tg = ad->grad_buf();
                S* t = tg.data() + r * dcount;
                double m1 = 0, m2 = 0;
                for (int64_t i = 0; i < dcount; ++i) {
                    double dxh = static_cast<double>(g[i]) * gd->value[i];
                    m1 += dxh;
                    m2 += dxh * xh[i];
                }
                m1 /= static_cast<double>(dcount);
                m2 /= static_cast<double>(dcount);
                S rs = (*rstd)[static_cast<size_t>(r)];
                for (int64_t i = 0; i < dcount; ++i) {
                    double dxh = static_cast<double>(g[i]) * gd->value[i];
                    t[i] += static_cast<S>(rs * (dxh - m1 - xh[i] * m2));
                }
            }
        }
    };
    return out;
}

// ---------------------------------------------------------------------------
// embedding lookup
// ---------------------------------------------------------------------------

template <class S>
TensorT<S> embedding(const TensorT<S>& table, const std::vector<int>& ids) {
    if (table.ndim() != 2) throw std::invalid_argument("embedding: table must be 2-d, got " + shape_str(table.shape()));
    int64_t v = table.dim(0), c = table.dim(1);
    for (int id : ids)
        if (id < 0 || id >= v)
            throw std::invalid_argument("embedding: id " + std::to_string(id) + " out of range [0," + std::to_string(v) +
                                        ")");
    TensorT<S> out = TensorT<S>::zeros({static_cast<int64_t>(ids.size()), c});
    for (size_t i = 0; i < ids.size(); ++i)
        std::memcpy(out.data() + static_cast<int64_t>(i) * c, table.data() + ids[i] * c,
                    static_cast<size_t>(c) * sizeof(S));
    auto* od = out.d.get();
    auto* td = table.d.get();
    detail::wire1(out, table, [od, td, ids, c]() {
        std::vector<S>& tg = td->grad_buf();
        for (size_t i = 0; i < ids.size(); ++i) {
            const S* g = od->grad.data() + static_cast<int64_t>(i) * c;
            S* t = tg.data() + ids[i] * c;
            for (int64_t j = 0; j < c; ++j) t[j] += g[j];
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// reductions
// ---------------------------------------------------------------------------

template <class S>
TensorT<S> sum_all(const TensorT<S>& a) {
    double s = 0;
    for (int64_t i = 0; i < a.numel(); ++i) s += a.data()[i];
    TensorT<S> out = TensorT<S>::scalar(static_cast<S>(s));
    auto* od = out.d.get();
    auto* ad = a.d.get();
    detail::wire1(out, a, [od, ad]() {
        std::vector<S>& tg = ad->grad_buf();
        S g = od->grad[0];
        for (auto& t : tg) t += g;
    });
    return out;
}

template <class S>
TensorT<S> mean_all(const TensorT<S>& a) {
    return scale(sum_all(a), 1.0 / static_cast<double>(a.numel()));
}

template <class S>
TensorT<S> sum_axis(const TensorT<S>& a, int axis) {
    int nd = a.ndim();
    if (axis < 0) axis += nd;
    Shape os;
    for (int i = 0; i < nd; ++i)
        if (i != axis) os.push_back(a.dim(i));
    if (os.empty()) os.push_back(1);
    int64_t outer = 1;
    for (int i = 0; i < axis; ++i) outer *= a.dim(i);
    int64_t ax = a.dim(axis);
    int64_t inner = 1;
    for (int i = axis + 1; i < nd; ++i) inner *= a.dim(i);
    TensorT<S> out = TensorT<S>::zeros(os);
    for (int64_t o = 0; o < outer; ++o)
        for (int64_t x = 0; x < ax; ++x) {
            const S* src = a.data() + (o * ax + x) * inner;
            S* dst = out.data() + o * inner;
            for (int64_t i = 0; i < inner; ++i) dst[i] += src[i];
        }
    auto* od = out.d.get();
    auto* ad = a.d.get();
    detail::wire1(out, a, [od, ad, outer, ax, inner]() {
        std::vector<S>& tg = ad->grad_buf();
        for (int64_t o = 0; o < outer; ++o)
            for (int64_t x = 0; x < ax; ++x) {
                S* dst = tg.data() + (o * ax + x) * inner;
                const S* g = od->grad.data() + o * inner;
                for (int64_t i = 0; i < inner; ++i) dst[i] += g[i];
            }
    });
    return out;
}

template <class S>
TensorT<S> mean_axis(const TensorT<S>& a, int axis) {
    int nd = a.ndim();
    int ax = axis < 0 ? axis + nd : axis;
    return scale(sum_axis(a, ax), 1.0 / static_cast<double>(a.dim(ax)));
}

// ---------------------------------------------------------------------------
// dropout: inverted scaling at train time, exact identity in eval mode
// ---------------------------------------------------------------------------

template <class S>
TensorT<S> dropout(const TensorT<S>& a, double rate, bool train, Rng& rng) {
    if (rate < 0 || rate >= 1) throw std::invalid_argument("dropout: rate must be in [0,1), got " + std::to_string(rate));
    if (!train || rate == 0.0) return a;
    TensorT<S> out = TensorT<S>::zeros(a.shape());
    auto mask = std::make_shared<std::vector<S>>(static_cast<size_t>(a.numel()));
    S keep_scale = static_cast<S>(1.0 / (1.0 - rate));
    for (int64_t i = 0; i < a.numel(); ++i) {
        S m = rng.uniform() >= rate ? keep_scale : S(0);
        (*mask)[static_cast<size_t>(i)] = m;
        out.data()[i] = a.data()[i] * m;
    }
    auto* od = out.d.get();
    auto* ad = a.d.get();
    detail::wire1(out, a, [od, ad, mask]() {
        std::vector<S>& tg = ad->grad_buf();
        for (int64_t i = 0; i < od->numel(); ++i) tg[i] += od->grad[i] * (*mask)[static_cast<size_t>(i)];
    });
    return out;
}

// ---------------------------------------------------------------------------
// scaled dot-product attention (composite). q,k,v: [..., T, D]; mask is
// additive, broadcast against the [..., Tq, Tk] score tensor.
// ---------------------------------------------------------------------------

template <class S>
TensorT<S> attention(const TensorT<S>& q, const TensorT<S>& k, const TensorT<S>& v, const TensorT<S>* mask = nullptr) {
    int64_t dk = q.dim(-1);
    TensorT<S> scores = matmul(q, transpose(k));
    scores = scale(scores, 1.0 / std::sqrt(static_cast<double>(dk)));
    if (mask) scores = add(scores, *mask);
    return matmul(softmax(scores), v);
}

// ---------------------------------------------------------------------------
// losses
// ---------------------------------------------------------------------------

template <class S>
TensorT<S> cross_entropy(const TensorT<S>& logits, const std::vector<int>& targets) {
    if (logits.ndim() != 2) throw std::invalid_argument("cross_entropy: logits must be 2-d, got " + shape_str(logits.shape()));
    int64_t n = logits.dim(0), k = logits.dim(1);
    if (static_cast<int64_t>(targets.size()) != n)
        throw std::invalid_argument("cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                                    std::to_string(n) + " rows");
    auto probs = std::make_shared<std::vector<S>>(static_cast<size_t>(n * k));
    double loss = 0;
    for (int64_t r = 0; r < n; ++r) {
        const S* x = logits.data() + r * k;
        if (targets[static_cast<size_t>(r)] < 0 || targets[static_cast<size_t>(r)] >= k)
            throw std::invalid_argument("cross_entropy: target " + std::to_string(targets[static_cast<size_t>(r)]) +
                                        " out of range [0," + std::to_string(k) + ")");
        S mx = x[0];
        for (int64_t i = 1; i < k; ++i) mx = std::max(mx, x[i]);
        double sum = 0;
        for (int64_t i = 0; i < k; ++i) sum += std::exp(static_cast<double>(x[i] - mx));
        double lse = std::log(sum) + mx;
        loss += lse - x[targets[static_cast<size_t>(r)]];
        for (int64_t i = 0; i < k; ++i)
            (*probs)[static_cast<size_t>(r * k + i)] = static_cast<S>(std::exp(static_cast<double>(x[i]) - lse));
    }
    TensorT<S> out = TensorT<S>::scalar(static_cast<S>(loss / static_cast<double>(n)));
    auto* od = out.d.get();
    auto* ld = logits.d.get();
    detail::wire1(out, logits, [od, ld, probs, targets, n, k]() {
        std::vector<S>& tg = ld->grad_buf();
        S g = od->grad[0] / static_cast<S>(n);
        for (int64_t r = 0; r < n; ++r) {
            S* t = tg.data() + r * k;
            const S* p = probs->data() + r * k;
            for (int64_t i = 0; i < k; ++i) t[i] += g * p[i];
            t[targets[static_cast<size_t>(r)]] -= g;
        }
    });
    return out;
}

namespace detail {

template <class S>
void check_same_shape(const TensorT<S>& a, const TensorT<S>& b, const char* op) {
    if (a.shape() != b.shape())
        throw std::invalid_argument(std::string(op) + ": shapes differ, " + shape_str(a.shape()) + " vs " +
                                    shape_str(b.shape()));
}

}  // namespace detail

// mean absolute error
template <class S>
TensorT<S> l1_loss(const TensorT<S>& a, const TensorT<S>& b) {
    detail::check_same_shape(a, b, "l1_loss");
    int64_t n = a.numel();
    double s = 0;
    for (int64_t i = 0; i < n; ++i) s += std::abs(static_cast<double>(a.data()[i]) - b.data()[i]);
    TensorT<S> out = TensorT<S>::scalar(static_cast<S>(s / static_cast<double>(n)));
    auto* od = out.d.get();
    auto* ad = a.d.get();
    auto* bd = b.d.get();
    detail::wire2(out, a, b, [od, ad, bd, n]() {
        S g = od->grad[0] / static_cast<S>(n);
        for (int64_t i = 0; i < n; ++i) {
            S diff = ad->value[i] - bd->value[i];
            S sgn = diff > 0 ? S(1) : (diff < 0 ? S(-1) : S(0));
            if (ad->requires_grad) ad->grad_buf()[i] += g * sgn;
            if (bd->requires_grad) bd->grad_buf()[i] -= g * sgn;
        }
    });
    return out;
}

template <class S>
TensorT<S> mse_loss(const TensorT<S>& a, const TensorT<S>& b) {
    detail::check_same_shape(a, b, "mse_loss");
    int64_t n = a.numel();
    double s = 0;
    for (int64_t i = 0; i < n; ++i) {
        double dv = static_cast<double>(a.data()[i]) - b.data()[i];
        s += dv * dv;
    }
    TensorT<S> out = TensorT<S>::scalar(static_cast<S>(s / static_cast<double>(n)));
    auto* od = out.d.get();
    auto* ad = a.d.get();
    auto* bd = b.d.get();
    detail::wire2(out, a, b, [od, ad, bd, n]() {
        S g = od->grad[0] * S(2) / static_cast<S>(n);
        for (int64_t i = 0; i < n; ++i) {
            S diff = ad->value[i] - bd->value[i];
            if (ad->requires_grad) ad->grad_buf()[i] += g * diff;
            if (bd->requires_grad) bd->grad_buf()[i] -= g * diff;
        }
    });
    return out;
}

template <class S>
TensorT<S> exp_op(const TensorT<S>& a) {
    TensorT<S> out = TensorT<S>::zeros(a.shape());
    for (int64_t i = 0; i < a.numel(); ++i) out.data()[i] = std::exp(a.data()[i]);
    auto* od = out.d.get();
    auto* ad = a.d.get();
    detail::wire1(out, a, [od, ad]() {
        std::vector<S>& tg = ad->grad_buf();
        for (int64_t i = 0; i < od->numel(); ++i) tg[i] += od->grad[i] * od->value[i];
    });
    return out;
}

// row-wise L2 normalization over the last axis
template <class S>
TensorT<S> l2_normalize(const TensorT<S>& a, double eps = 1e-8) {
    int64_t dcount = a.dim(-1);
    int64_t rows = a.numel() / dcount;
    TensorT<S> out = TensorT<S>::zeros(a.shape());
    auto norms = std::make_shared<std::vector<double>>(static_cast<size_t>(rows));
    for (int64_t r = 0; r < rows; ++r) {
        const S* x = a.data() + r * dcount;
        double n = 0;
        for (int64_t i = 0; i < dcount; ++i) n += static_cast<double>(x[i]) * x[i];
        n = std::sqrt(n) + eps;
        (*norms)[static_cast<size_t>(r)] = n;
        S* y = out.data() + r * dcount;
        for (int64_t i = 0; i < dcount; ++i) y[i] = static_cast<S>(x[i] / n);
    }
    auto* od = out.d.get();
    auto* ad = a.d.get();
    detail::wire1(out, a, [od, ad, norms, rows, dcount]() {
        std::vector<S>& tg = ad->grad_buf();
        for (int64_t r = 0; r < rows; ++r) {
            const S* y = od->value.data() + r * dcount;
            const S* g = od->grad.data() + r * dcount;
            S* t = tg.data() + r * dcount;
            double n = (*norms)[static_cast<size_t>(r)];
            double dot = 0;
            for (int64_t i = 0; i < dcount; ++i) dot += static_cast<double>(g[i]) * y[i];
            for (int64_t i = 0; i < dcount; ++i) t[i] += static_cast<S>((g[i] - dot * y[i]) / n);
        }
    });
    return out;
}

// Pairwise sigmoid matching loss over a square logit matrix: diagonal entries
// are positives (+1), off-diagonal in-batch negatives (-1);
// mean of softplus(-z_ij * l_ij).
template <class S>
TensorT<S> pairwise_sigmoid_loss(const TensorT<S>& logits) {
    if (logits.ndim() != 2 || logits.dim(0) != logits.dim(1))
        throw std::invalid_argument("pairwise_sigmoid_loss: logits must be square, got " + shape_str(logits.shape()));
    int64_t n = logits.dim(0);
    if (n < 2) throw std::invalid_argument("pairwise_sigmoid_loss: batch must be >= 2 for in-batch negatives");
    auto softplus = [](double x) { return x > 30 ? x : std::log1p(std::exp(x)); };
    double loss = 0;
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < n; ++j) {
            double z = i == j ? 1.0 : -1.0;
            loss += softplus(-z * static_cast<double>(logits.data()[i * n + j]));
        }
    TensorT<S> out = TensorT<S>::scalar(static_cast<S>(loss / static_cast<double>(n * n)));
    auto* od = out.d.get();
    auto* ld = logits.d.get();
    detail::wire1(out, logits, [od, ld, n]() {
        std::vector<S>& tg = ld->grad_buf();
        S g = od->grad[0] / static_cast<S>(n * n);
        for (int64_t i = 0; i < n; ++i)
            for (int64_t j = 0; j < n; ++j) {
                double z = i == j ? 1.0 : -1.0;
                double x = -z * static_cast<double>(ld->value[i * n + j]);
                double sig = 1.0 / (1.0 + std::exp(-x));
                tg[i * n + j] += static_cast<S>(g * (-z) * sig);
            }
    });
    return out;
}

// cosine similarity over the last axis; result drops that axis
template <class S>
TensorT<S> cosine_similarity(const TensorT<S>& a, const TensorT<S>& b, double eps = 1e-8) {
    detail::check_same_shape(a, b, "cosine_similarity");
    int64_t dcount = a.dim(-1);
    int64_t rows = a.numel() / dcount;
    Shape os(a.shape().begin(), a.shape().end() - 1);
    if (os.empty()) os.push_back(1);
    TensorT<S> out = TensorT<S>::zeros(os);
    auto saved = std::make_shared<std::vector<double>>(static_cast<size_t>(rows * 3));  // dot, na, nb
    for (int64_t r = 0; r < rows; ++r) {
        const S* x = a.data() + r * dcount;
        const S* y = b.data() + r * dcount;
        double dot = 0, na = 0, nb = 0;
        for (int64_t i = 0; i < dcount; ++i) {
            dot += static_cast<double>(x[i]) * y[i];
            na += static_cast<double>(x[i]) * x[i];
            nb += static_cast<double>(y[i]) * y[i];
        }
        na = std::sqrt(na);
        nb = std::sqrt(nb);
        (*saved)[static_cast<size_t>(r * 3)] = dot;
        (*saved)[static_cast<size_t>(r * 3 + 1)] = na;
        (*saved)[static_cast<size_t>(r * 3 + 2)] = nb;
        out.data()[r] = static_cast<S>(dot / (na * nb + eps));
    }
    auto* od = out.d.get();
    auto* ad = a.d.get();
    auto* bd = b.d.get();
    detail::wire2(out, a, b, [od, ad, bd, saved, rows, dcount, eps]() {
        for (int64_t r = 0; r < rows; ++r) {
            double g = od->grad[r];
            if (g == 0) continue;
            double dot = (*saved)[static_cast<size_t>(r * 3)];
            double na = (*saved)[static_cast<size_t>(r * 3 + 1)];
            double nb = (*saved)[static_cast<size_t>(r * 3 + 2)];
            double denom = na * nb + eps;
            const S* x = ad->value.data() + r * dcount;
            const S* y = bd->value.data() + r * dcount;
            if (ad->requires_grad) {
                S* t = ad->grad_buf().data() + r * dcount;
                double c1 = 1.0 / denom;
                double c2 = dot * nb / (na * denom * denom);
                for (int64_t i = 0; i < dcount; ++i) t[i] += static_cast<S>(g * (y[i] * c1 - x[i] * c2));
            }
            if (bd->requires_grad) {
                S* t = bd->grad_buf().data() + r * dcount;
                double c1 = 1.0 / denom;
                double c2 = dot * na / (nb * denom * denom);
                for (int64_t i = 0; i < dcount; ++i) t[i] += static_cast<S>(g * (x[i] * c1 - y[i] * c2));
            }
        }
    });
    return out;
}

}  // namespace vlalab::core
