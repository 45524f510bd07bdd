#include "vlalab/enc/vit.hpp"

#include <cstring>
#include <stdexcept>

namespace vlalab::enc {

using namespace core;

PatchTokens patchify(const std::vector<float>& frames, int t_frames, int h, int w, int patch, int tubelet) {
    if (h % patch != 0 || w % patch != 0)
        throw std::invalid_argument("patchify: frame " + std::to_string(h) + "x" + std::to_string(w) +
                                    " not divisible by patch " + std::to_string(patch));
    if (t_frames % tubelet != 0)
        throw std::invalid_argument("patchify: " + std::to_string(t_frames) + " frames not divisible by tubelet depth " +
                                    std::to_string(tubelet));
    if (frames.size() != static_cast<size_t>(t_frames) * h * w * 3)
        throw std::invalid_argument("patchify: buffer holds " + std::to_string(frames.size()) + " floats, expected " +
                                    std::to_string(static_cast<size_t>(t_frames) * h * w * 3));

    int gh = h / patch, gw = w / patch, gt = t_frames / tubelet;
    PatchTokens out;
    out.n = gt * gh * gw;
    out.dim = tubelet * patch * patch * 3;
    out.tokens.resize(static_cast<size_t>(out.n) * out.dim);
    out.spatial_ids.resize(static_cast<size_t>(out.n));
    out.temporal_ids.resize(static_cast<size_t>(out.n));

    size_t frame_stride = static_cast<size_t>(h) * w * 3;
    for (int tt = 0; tt < gt; ++tt)
        for (int gi = 0; gi < gh; ++gi)
            for (int gj = 0; gj < gw; ++gj) {
                int tok = tt * gh * gw + gi * gw + gj;
                out.spatial_ids[static_cast<size_t>(tok)] = gi * gw + gj;
                out.temporal_ids[static_cast<size_t>(tok)] = tt;
                float* dst = out.tokens.data() + static_cast<size_t>(tok) * out.dim;
                for (int dt = 0; dt < tubelet; ++dt) {
                    const float* src = frames.data() + (static_cast<size_t>(tt) * tubelet + dt) * frame_stride;
                    for (int pi = 0; pi < patch; ++pi) {
                        const float* row = src + ((static_cast<size_t>(gi) * patch + pi) * w + static_cast<size_t>(gj) * patch) * 3;
                        std::memcpy(dst, row, static_cast<size_t>(patch) * 3 * sizeof(float));
                        dst += patch * 3;
                    }
                }
            }
    return out;
}

std::vector<float> unpatchify(const PatchTokens& tokens, int t_frames, int h, int w, int patch, int tubelet) {
    int gh = h / patch, gw = w / patch, gt = t_frames / tubelet;
    if (tokens.n != gt * gh * gw) throw std::invalid_argument("unpatchify: token count mismatch");
    std::vector<float> frames(static_cast<size_t>(t_frames) * h * w * 3);
    size_t frame_stride = static_cast<size_t>(h) * w * 3;
    for (int tok = 0; tok < tokens.n; ++tok) {
        int tt = tok / (gh * gw);
        int rem = tok % (gh * gw);
        int gi = rem / gw, gj = rem % gw;
        const float* src = tokens.tokens.data() + static_cast<size_t>(tok) * tokens.dim;
        for (int dt = 0; dt < tubelet; ++dt) {
            float* dst_frame = frames.data() + (static_cast<size_t>(tt) * tubelet + dt) * frame_stride;
            for (int pi = 0; pi < patch; ++pi) {
                float* row = dst_frame + ((static_cast<size_t>(gi) * patch + pi) * w + static_cast<size_t>(gj) * patch) * 3;
                std::memcpy(row, src, static_cast<size_t>(patch) * 3 * sizeof(float));
                src += patch * 3;
            }
        }
    }
    return frames;
}

ViTBackbone::ViTBackbone(const ViTConfig& c, Rng& rng) : cfg(c), patch_embed(c.token_dim(), c.width, rng) {
    pos_spatial = Tensor::randn({static_cast<int64_t>(c.grid()) * c.grid(), c.width}, rng, 0.02).set_requires_grad();
    pos_temporal = Tensor::randn({4, c.width}, rng, 0.02).set_requires_grad();
    for (int i = 0; i < c.depth; ++i) blocks.emplace_back(c.width, c.heads, c.ff_dim, rng);
    ln_final = LayerNormL(c.width);
}

Tensor ViTBackbone::forward(const Tensor& x, const std::vector<int>& spatial_ids, const std::vector<int>& temporal_ids,
                            bool train, Rng& rng) const {
    if (x.ndim() != 3 || x.dim(2) != cfg.token_dim())
        throw std::invalid_argument("vit: expected [B,n," + std::to_string(cfg.token_dim()) + "] tokens, got " +
                                    shape_str(x.shape()));
    Tensor h = patch_embed.forward(x);
    Tensor pos = add(embedding(pos_spatial, spatial_ids), embedding(pos_temporal, temporal_ids));
    h = add(h, pos);  // [B,n,C] + [n,C]
    for (const auto& blk : blocks) h = blk.forward(h, nullptr, train, rng);
    return ln_final.forward(h);
}

void ViTBackbone::collect(ParamList& ps, const std::string& prefix) const {
    patch_embed.collect(ps, prefix + ".patch_embed");
    ps.add(prefix + ".pos_spatial", pos_spatial);
    ps.add(prefix + ".pos_temporal", pos_temporal);
    for (size_t i = 0; i < blocks.size(); ++i) blocks[i].collect(ps, prefix + ".block" + std::to_string(i));
    ln_final.collect(ps, prefix + ".ln_final");
}

void ViTBackbone::freeze() {
    ParamList ps;
    collect(ps, "enc");
    for (auto& [name, t] : ps.items) {
        t.set_requires_grad(false);
        t.zero_grad();
    }
}

void ViTBackbone::copy_from(const ViTBackbone& other) {
    ParamList a, b;
    collect(a, "x");
    other.collect(b, "x");
    if (a.items.size() != b.items.size()) throw std::runtime_error("vit copy_from: parameter count mismatch");
    for (size_t i = 0; i < a.items.size(); ++i) a.items[i].second.values() = b.items[i].second.values();
}

Tensor stack_tokens(const std::vector<const PatchTokens*>& clips) {
    if (clips.empty()) throw std::invalid_argument("stack_tokens: empty batch");
    int n = clips[0]->n, dim = clips[0]->dim;
    Tensor out = Tensor::zeros({static_cast<int64_t>(clips.size()), n, dim});
    for (size_t b = 0; b < clips.size(); ++b) {
        if (clips[b]->n != n || clips[b]->dim != dim) throw std::invalid_argument("stack_tokens: ragged batch");
        std::memcpy(out.data() + b * static_cast<size_t>(n) * dim, clips[b]->tokens.data(),
                    static_cast<size_t>(n) * dim * sizeof(float));
    }
    return out;
}

}  // namespace vlalab::enc
