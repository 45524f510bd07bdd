#pragma once

#include <string>
#include <vector>

#include "vlalab/core/ops.hpp"

namespace vlalab::core {

// Named parameter list in declaration order; the order is what the
// checkpoint container persists.
template <class S>
struct ParamListT {
    std::vector<std::pair<std::string, TensorT<S>>> items;

    void add(const std::string& name, const TensorT<S>& t) { items.emplace_back(name, t); }

    std::vector<TensorT<S>> tensors() const {
        std::vector<TensorT<S>> out;
        out.reserve(items.size());
        for (const auto& [n, t] : items) out.push_back(t);
        return out;
    }
};

template <class S>
struct LinearT {
    TensorT<S> w;  // [in, out]
    TensorT<S> b;  // [out]

    LinearT() = default;
    LinearT(int64_t in, int64_t out, Rng& rng, double init_std = 0.02) {
        w = TensorT<S>::randn({in, out}, rng, init_std).set_requires_grad();
        b = TensorT<S>::zeros({out}).set_requires_grad();
    }

    TensorT<S> forward(const TensorT<S>& x) const { return add(matmul(x, w), b); }

    void collect(ParamListT<S>& ps, const std::string& prefix) const {
        ps.add(prefix + ".w", w);
        ps.add(prefix + ".b", b);
    }
};

template <class S>
struct LayerNormLT {
    TensorT<S> gamma, beta;

    LayerNormLT() = default;
    explicit LayerNormLT(int64_t dim) {
        gamma = TensorT<S>::full({dim}, S(1)).set_requires_grad();
        beta = TensorT<S>::zeros({dim}).set_requires_grad();
    }

    TensorT<S> forward(const TensorT<S>& x) const { return layer_norm(x, gamma, beta); }

    void collect(ParamListT<S>& ps, const std::string& prefix) const {
        ps.add(prefix + ".gamma", gamma);
        ps.add(prefix + ".beta", beta);
    }
};

template <class S>
struct EmbeddingLT {
    TensorT<S> table;  // [vocab, dim]

    EmbeddingLT() = default;
    EmbeddingLT(int64_t vocab, int64_t dim, Rng& rng, double init_std = 0.02) {
        table = TensorT<S>::randn({vocab, dim}, rng, init_std).set_requires_grad();
    }

    TensorT<S> forward(const std::vector<int>& ids) const { return embedding(table, ids); }

    void collect(ParamListT<S>& ps, const std::string& prefix) const { ps.add(prefix + ".table", table); }
};

// Multi-head attention; queries may come from a different sequence than
// keys/values (cross-attention). x_q: [B,Tq,C], x_kv: [B,Tk,Ckv].
template <class S>
struct MultiHeadAttentionT {
    LinearT<S> wq, wk, wv, wo;
    int heads = 1;
    int64_t model_dim = 0;

    MultiHeadAttentionT() = default;
    MultiHeadAttentionT(int64_t dim, int n_heads, Rng& rng, int64_t kv_dim = -1)
        : wq(dim, dim, rng),
          wk(kv_dim < 0 ? dim : kv_dim, dim, rng),
          wv(kv_dim < 0 ? dim : kv_dim, dim, rng),
          wo(dim, dim, rng),
          heads(n_heads),
          model_dim(dim) {
        if (dim % n_heads != 0) throw std::invalid_argument("attention: dim " + std::to_string(dim) + " not divisible by heads");
    }

    TensorT<S> forward(const TensorT<S>& x_q, const TensorT<S>& x_kv, const TensorT<S>* mask = nullptr) const {
        int64_t batch = x_q.dim(0), tq = x_q.dim(1), tk = x_kv.dim(1);
        int64_t hd = model_dim / heads;
        auto split = [&](const TensorT<S>& t, int64_t tlen) {
            return transpose(reshape(t, {batch, tlen, heads, hd}), {0, 2, 1, 3});  // [B,h,T,hd]
        };
        TensorT<S> q = split(wq.forward(x_q), tq);
        TensorT<S> k = split(wk.forward(x_kv), tk);
        TensorT<S> v = split(wv.forward(x_kv), tk);
        TensorT<S> ctx = attention(q, k, v, mask);  // [B,h,Tq,hd]
        ctx = reshape(transpose(ctx, {0, 2, 1, 3}), {batch, tq, model_dim});
        return wo.forward(ctx);
    }

    void collect(ParamListT<S>& ps, const std::string& prefix) const {
        wq.collect(ps, prefix + ".wq");
        wk.collect(ps, prefix + ".wk");
        wv.collect(ps, prefix + ".wv");
        wo.collect(ps, prefix + ".wo");
    }
};

// Pre-LN transformer block. residual_scale shrinks the init of the two
// projections feeding the residual stream (0.02/sqrt(2L) for an L-block
// stack keeps deep stacks trainable).
template <class S>
struct TransformerBlockT {
    LayerNormLT<S> ln1, ln2;
    MultiHeadAttentionT<S> attn;
    LinearT<S> fc1, fc2;
    double dropout_rate = 0.0;

    TransformerBlockT() = default;
    TransformerBlockT(int64_t dim, int heads, int64_t ff_dim, Rng& rng, double dropout = 0.0, double residual_scale = 1.0)
        : ln1(dim), ln2(dim), attn(dim, heads, rng), fc1(dim, ff_dim, rng), fc2(ff_dim, dim, rng, 0.02 * residual_scale),
          dropout_rate(dropout) {
        Rng reinit(rng.u64());
        attn.wo = LinearT<S>(dim, dim, reinit, 0.02 * residual_scale);
    }

    TensorT<S> forward(const TensorT<S>& x, const TensorT<S>* mask, bool train, Rng& rng) const {
        TensorT<S> n = ln1.forward(x);
        TensorT<S> h = attn.forward(n, n, mask);
        h = dropout(h, dropout_rate, train, rng);
        TensorT<S> y = add(x, h);
        TensorT<S> f = fc2.forward(gelu(fc1.forward(ln2.forward(y))));
        f = dropout(f, dropout_rate, train, rng);
        return add(y, f);
    }

    void collect(ParamListT<S>& ps, const std::string& prefix) const {
        ln1.collect(ps, prefix + ".ln1");
        ln2.collect(ps, prefix + ".ln2");
        attn.collect(ps, prefix + ".attn");
        fc1.collect(ps, prefix + ".fc1");
        fc2.collect(ps, prefix + ".fc2");
    }
};

using ParamList = ParamListT<float>;
using Linear = LinearT<float>;
using LayerNormL = LayerNormLT<float>;
using EmbeddingL = EmbeddingLT<float>;
using MultiHeadAttention = MultiHeadAttentionT<float>;
using TransformerBlock = TransformerBlockT<float>;

}  // namespace vlalab::core
