#pragma once

#include <vector>

#include "vlalab/core/nn.hpp"

namespace vlalab::enc {

using core::Rng;
using core::Tensor;

struct ViTConfig {
    int patch = 8;
    int tubelet = 2;  // frames folded into one token (video family; image families use 1)
    int width = 128;
    int depth = 4;
    int heads = 4;
    int ff_dim = 256;
    int resolution = 32;
    int context_frames = 2;  // frames consumed by encode(); longer clips stay behind this flag

    int grid() const { return resolution / patch; }
    int tokens_per_clip(int t_frames) const { return (t_frames / tubelet) * grid() * grid(); }
    int token_dim() const { return tubelet * patch * patch * 3; }
};

// Tokens in time-major raster order: token index = tt*(H/p)*(W/p) + gi*(W/p) + gj,
// with (dt, pi, pj, channel) nested inside each token vector.
struct PatchTokens {
    std::vector<float> tokens;  // [N, token_dim] row-major
    std::vector<int> spatial_ids;
    std::vector<int> temporal_ids;
    int n = 0;
    int dim = 0;
};

// frames: T stacked H*W*3 float images. T must be divisible by the tubelet
// depth and H, W by the patch size.
PatchTokens patchify(const std::vector<float>& frames, int t_frames, int h, int w, int patch, int tubelet);

// Inverse raster mapping; exact round-trip.
std::vector<float> unpatchify(const PatchTokens& tokens, int t_frames, int h, int w, int patch, int tubelet);

struct ViTBackbone {
    ViTConfig cfg;
    core::Linear patch_embed;
    Tensor pos_spatial;   // [grid*grid, width]
    Tensor pos_temporal;  // [4, width] (up to 4 tubelet slots)
    std::vector<core::TransformerBlock> blocks;
    core::LayerNormL ln_final;

    ViTBackbone() = default;
    ViTBackbone(const ViTConfig& cfg, Rng& rng);

    // x: [B, n, token_dim] raw patch vectors (a subset of the grid is fine —
    // ids name each token's table entries).
    Tensor forward(const Tensor& x, const std::vector<int>& spatial_ids, const std::vector<int>& temporal_ids,
                   bool train, Rng& rng) const;

    void collect(core::ParamList& ps, const std::string& prefix) const;
    void freeze();
    void copy_from(const ViTBackbone& other);  // values only; shapes must match
};

// Stacks per-clip patch vectors into a [B, n, dim] input tensor.
Tensor stack_tokens(const std::vector<const PatchTokens*>& clips);

}  // namespace vlalab::enc
