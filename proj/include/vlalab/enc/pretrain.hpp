#pragma once

#include "vlalab/enc/encoder.hpp"
#include "vlalab/sim/dataset.hpp"

namespace vlalab::enc {

struct PretrainConfig {
    int batch = 32;
    int steps = 800;
    double lr = 3e-4;
    double weight_decay = 1e-5;

    // video-predictive objective
    double mask_ratio = 0.5;
    double ema_tau = 0.996;
    int predictor_depth = 2;

    // two-view agreement objective
    double crop_min_area = 0.7;       // random crop 70-100%, rescaled
    double brightness_jitter = 0.05;  // mild photometric jitter
    double tint_jitter = 0.02;

    // language-image objective
    int embed_dim = 64;

    int log_every = 100;
};

struct PretrainResult {
    EncoderCheckpoint checkpoint;
    json log;  // loss curve samples, config echo
    bool collapse_flag = false;
};

// Masked-latent prediction across a 2-frame clip: online encoder on visible
// tokens, 2-layer predictor regresses EMA-target latents of a contiguous
// masked block; targets receive no gradient.
PretrainResult pretrain_video_predictive(const sim::Dataset& ds, const ViTConfig& vit, const PretrainConfig& cfg,
                                         uint64_t seed);

// Two augmented views per frame, predictor head on one side, stop-gradient on
// the other, symmetric negative-cosine loss.
PretrainResult pretrain_aug_selfsup(const sim::Dataset& ds, const ViTConfig& vit, const PretrainConfig& cfg,
                                    uint64_t seed);

// Pairwise sigmoid matching between mean-pooled frame features and a small
// instruction-token transformer, with learned temperature and bias.
PretrainResult pretrain_lang_contrastive(const sim::Dataset& ds, const ViTConfig& vit, const PretrainConfig& cfg,
                                         uint64_t seed);

// target <- tau * target + (1 - tau) * online, exactly, per parameter
void ema_update(ViTBackbone& target, const ViTBackbone& online, double tau);

// contiguous block of round(ratio * n) token ids in raster order
std::vector<int> block_mask(int n_tokens, double ratio, core::Rng& rng);

struct CollapseReport {
    std::vector<float> per_dim_std;
    float min_std = 0.f;
    float mean_std = 0.f;
    bool flagged = false;  // mean per-dim std < 0.01
};

// Per-dimension std over mean-pooled features; needs >= 100 vectors.
CollapseReport collapse_metric(const std::vector<std::vector<float>>& pooled_features);

// Pools encoder features over dataset frames and runs the collapse check.
CollapseReport encoder_collapse_report(const EncoderCheckpoint& ck, const sim::Dataset& ds, int max_samples = 200);

}  // namespace vlalab::enc
