#include "vlalab/enc/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vlalab/core/optim.hpp"
#include "vlalab/sim/instruction.hpp"

namespace vlalab::enc {

using namespace core;

namespace {

struct SamplePool {
    std::vector<std::pair<int, int>> items;  // (traj, step)
    size_t cursor = 0;

    SamplePool(const sim::Dataset& ds, int min_step) {
        for (size_t t = 0; t < ds.trajectories.size(); ++t)
            for (size_t s = static_cast<size_t>(min_step); s < ds.trajectories[t].steps.size(); ++s)
                items.emplace_back(static_cast<int>(t), static_cast<int>(s));
    }

    std::vector<std::pair<int, int>> draw(int n, Rng& rng) {
        std::vector<std::pair<int, int>> out;
        out.reserve(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            if (cursor == 0) rng.shuffle(items);
            out.push_back(items[cursor]);
            cursor = (cursor + 1) % items.size();
        }
        return out;
    }
};

json base_log(const sim::Dataset& ds, const PretrainConfig& cfg, uint64_t seed) {
    json j;
    j["dataset"] = ds.id();
    j["seed"] = seed;
    j["steps"] = cfg.steps;
    j["batch"] = cfg.batch;
    j["lr"] = cfg.lr;
    j["weight_decay"] = cfg.weight_decay;
    return j;
}

// bilinear crop-and-resize plus mild photometric jitter
std::vector<float> augment_view(const std::vector<float>& frame, int res, const PretrainConfig& cfg, Rng& rng) {
    double area = rng.uniform(cfg.crop_min_area, 1.0);
    float side = static_cast<float>(res) * static_cast<float>(std::sqrt(area));
    float x0 = static_cast<float>(rng.uniform(0.0, res - side));
    float y0 = static_cast<float>(rng.uniform(0.0, res - side));
    float b = static_cast<float>(rng.uniform(1.0 - cfg.brightness_jitter, 1.0 + cfg.brightness_jitter));
    float tint[3];
    for (auto& t : tint) t = static_cast<float>(rng.uniform(-cfg.tint_jitter, cfg.tint_jitter));

    std::vector<float> out(static_cast<size_t>(res) * res * 3);
    for (int i = 0; i < res; ++i)
        for (int j = 0; j < res; ++j) {
            float sy = y0 + (static_cast<float>(i) + 0.5f) * side / static_cast<float>(res) - 0.5f;
            float sx = x0 + (static_cast<float>(j) + 0.5f) * side / static_cast<float>(res) - 0.5f;
            sy = std::min(std::max(sy, 0.f), static_cast<float>(res - 1));
            sx = std::min(std::max(sx, 0.f), static_cast<float>(res - 1));
            int iy = static_cast<int>(sy), ix = static_cast<int>(sx);
            int iy1 = std::min(iy + 1, res - 1), ix1 = std::min(ix + 1, res - 1);
            float fy = sy - static_cast<float>(iy), fx = sx - static_cast<float>(ix);
            for (int c = 0; c < 3; ++c) {
                auto at = [&](int y, int x) { return frame[(static_cast<size_t>(y) * res + x) * 3 + c]; };
                float v = (1 - fy) * ((1 - fx) * at(iy, ix) + fx * at(iy, ix1)) +
                          fy * ((1 - fx) * at(iy1, ix) + fx * at(iy1, ix1));
                v = b * v + tint[c];
                out[(static_cast<size_t>(i) * res + j) * 3 + c] = std::min(std::max(v, 0.f), 1.f);
            }
        }
    return out;
}

}  // namespace

void ema_update(ViTBackbone& target, const ViTBackbone& online, double tau) {
    ParamList tp, op;
    target.collect(tp, "t");
    online.collect(op, "o");
    for (size_t i = 0; i < tp.items.size(); ++i) {
        auto& tv = tp.items[i].second.values();
        const auto& ov = op.items[i].second.values();
        for (size_t k = 0; k < tv.size(); ++k)
            tv[k] = static_cast<float>(tau * tv[k] + (1.0 - tau) * ov[k]);
    }
}

std::vector<int> block_mask(int n_tokens, double ratio, Rng& rng) {
    int m = static_cast<int>(std::lround(ratio * n_tokens));
    m = std::max(1, std::min(m, n_tokens - 1));
    int start = static_cast<int>(rng.randint(0, n_tokens - m + 1));
    std::vector<int> ids(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) ids[static_cast<size_t>(i)] = start + i;
    return ids;
}

PretrainResult pretrain_video_predictive(const sim::Dataset& ds, const ViTConfig& vit_in, const PretrainConfig& cfg,
                                         uint64_t seed) {
    ViTConfig vit = vit_in;
    vit.tubelet = 2;
    vit.resolution = ds.config.resolution;

    SamplePool pool(ds, /*min_step=*/1);
    if (pool.items.empty()) throw std::invalid_argument("pretrain_video_predictive: dataset has no >=2-frame clips");

    Rng rng(mix_seed(seed, 0x0e0aull));
    ViTBackbone online(vit, rng);
    ViTBackbone target(vit, rng);
    target.copy_from(online);
    target.freeze();

    const int C = vit.width;
    const int N = vit.tokens_per_clip(2);
    std::vector<TransformerBlock> predictor;
    for (int i = 0; i < cfg.predictor_depth; ++i) predictor.emplace_back(C, vit.heads, vit.ff_dim, rng);
    Tensor mask_token = Tensor::randn({C}, rng, 0.02).set_requires_grad().set_name("pred.mask_token");
    Tensor pred_pos = Tensor::randn({N, C}, rng, 0.02).set_requires_grad().set_name("pred.pos");
    Linear pred_out(C, C, rng);

    ParamList params;
    online.collect(params, "online");
    for (size_t i = 0; i < predictor.size(); ++i) predictor[i].collect(params, "pred.block" + std::to_string(i));
    params.add("pred.mask_token", mask_token);
    params.add("pred.pos", pred_pos);
    pred_out.collect(params, "pred.out");
    for (auto& [name, t] : params.items) t.set_name(name);
    AdamW opt({ParamGroup{"pretrain", params.tensors(), cfg.lr, cfg.weight_decay}});

    const int res = vit.resolution;
    const size_t frame_floats = static_cast<size_t>(res) * res * 3;
    const int D = vit.token_dim();

    json log = base_log(ds, cfg, seed);
    log["objective"] = "masked_latent_prediction";
    log["mask_ratio"] = cfg.mask_ratio;
    log["ema_tau"] = cfg.ema_tau;
    json curve = json::array();

    double first_loss = 0, last_loss = 0;
    std::vector<float> clip(frame_floats * 2);
    for (int step = 0; step < cfg.steps; ++step) {
        auto batch = pool.draw(cfg.batch, rng);
        std::vector<int> masked = block_mask(N, cfg.mask_ratio, rng);  // shared across the batch
        std::vector<int> ctx;
        for (int i = 0; i < N; ++i)
            if (i < masked.front() || i > masked.back()) ctx.push_back(i);
        int n_ctx = static_cast<int>(ctx.size()), n_mask = static_cast<int>(masked.size());

        Tensor ctx_tokens = Tensor::zeros({cfg.batch, n_ctx, D});
        Tensor full_tokens = Tensor::zeros({cfg.batch, N, D});
        std::vector<int> sp_ctx, tp_ctx, sp_full, tp_full;
        for (int b = 0; b < cfg.batch; ++b) {
            auto [t, s] = batch[static_cast<size_t>(b)];
            const auto& traj = ds.trajectories[static_cast<size_t>(t)];
            std::copy(traj.steps[static_cast<size_t>(s - 1)].frame.begin(), traj.steps[static_cast<size_t>(s - 1)].frame.end(),
                      clip.begin());
            std::copy(traj.steps[static_cast<size_t>(s)].frame.begin(), traj.steps[static_cast<size_t>(s)].frame.end(),
                      clip.begin() + static_cast<int64_t>(frame_floats));
            PatchTokens pt = patchify(clip, 2, res, res, vit.patch, vit.tubelet);
            if (b == 0) {
                for (int i : ctx) {
                    sp_ctx.push_back(pt.spatial_ids[static_cast<size_t>(i)]);
                    tp_ctx.push_back(pt.temporal_ids[static_cast<size_t>(i)]);
                }
                sp_full = pt.spatial_ids;
                tp_full = pt.temporal_ids;
            }
            for (int i = 0; i < n_ctx; ++i)
                std::memcpy(ctx_tokens.data() + (static_cast<size_t>(b) * n_ctx + i) * D,
                            pt.tokens.data() + static_cast<size_t>(ctx[static_cast<size_t>(i)]) * D,
                            static_cast<size_t>(D) * sizeof(float));
            std::memcpy(full_tokens.data() + static_cast<size_t>(b) * N * D, pt.tokens.data(),
                        static_cast<size_t>(N) * D * sizeof(float));
        }

        Rng no_drop(0);
        Tensor h_ctx = online.forward(ctx_tokens, sp_ctx, tp_ctx, true, no_drop);  // [B, n_ctx, C]

        // mask queries: learned token plus predictor position table, broadcast over the batch
        Tensor queries = add(Tensor::zeros({cfg.batch, n_mask, C}), add(embedding(pred_pos, masked), mask_token));
        Tensor seq = concat<float>({h_ctx, queries}, 1);
        for (const auto& blk : predictor) seq = blk.forward(seq, nullptr, true, no_drop);
        Tensor pred = pred_out.forward(slice(seq, 1, n_ctx, n_mask));  // [B, n_mask, C]

        Tensor h_tgt = target.forward(full_tokens, sp_full, tp_full, false, no_drop);  // no tape: target frozen
        Tensor tgt = slice(h_tgt, 1, masked.front(), n_mask).detach();

        Tensor loss = mse_loss(pred, tgt);
        double lv = loss.item();
        if (step == 0) first_loss = lv;
        last_loss = lv;
        if (step % cfg.log_every == 0) curve.push_back({{"step", step}, {"loss", lv}});

        backward(loss);
        opt.step();
        opt.zero_grad();
        ema_update(target, online, cfg.ema_tau);
    }

    PretrainResult out;
    out.checkpoint.family = EncoderFamily::VideoPredictive;
    out.checkpoint.vit = vit;
    out.checkpoint.backbone = std::move(online);
    out.checkpoint.backbone.freeze();
    log["initial_loss"] = first_loss;
    log["final_loss"] = last_loss;
    log["curve"] = curve;
    CollapseReport rep = encoder_collapse_report(out.checkpoint, ds);
    log["collapse"] = {{"min_std", rep.min_std}, {"mean_std", rep.mean_std}, {"flagged", rep.flagged}};
    out.collapse_flag = rep.flagged;
    out.checkpoint.train_meta = log;
    out.log = log;
    return out;
}

PretrainResult pretrain_aug_selfsup(const sim::Dataset& ds, const ViTConfig& vit_in, const PretrainConfig& cfg,
                                    uint64_t seed) {
    ViTConfig vit = vit_in;
    vit.tubelet = 1;
    vit.resolution = ds.config.resolution;

    SamplePool pool(ds, 0);
    if (pool.items.empty()) throw std::invalid_argument("pretrain_aug_selfsup: empty dataset");

    Rng rng(mix_seed(seed, 0x51aull));
    ViTBackbone backbone(vit, rng);
    const int C = vit.width;
    Linear proj(C, C, rng);
    Linear pred_fc1(C, C / 2, rng);
    Linear pred_fc2(C / 2, C, rng);

    ParamList params;
    backbone.collect(params, "backbone");
    proj.collect(params, "proj");
    pred_fc1.collect(params, "pred.fc1");
    pred_fc2.collect(params, "pred.fc2");
    for (auto& [name, t] : params.items) t.set_name(name);
    AdamW opt({ParamGroup{"pretrain", params.tensors(), cfg.lr, cfg.weight_decay}});

    const int res = vit.resolution;
    json log = base_log(ds, cfg, seed);
    log["objective"] = "two_view_agreement";
    log["crop_min_area"] = cfg.crop_min_area;
    log["brightness_jitter"] = cfg.brightness_jitter;
    json curve = json::array();

    auto embed_views = [&](const Tensor& x, const std::vector<int>& sp, const std::vector<int>& tp) {
        Rng no_drop(0);
        Tensor pooled = mean_axis(backbone.forward(x, sp, tp, true, no_drop), 1);  // [B, C]
        return proj.forward(pooled);
    };
    auto predict = [&](const Tensor& z) { return pred_fc2.forward(gelu(pred_fc1.forward(z))); };

    double first_loss = 0, last_loss = 0;
    for (int step = 0; step < cfg.steps; ++step) {
        auto batch = pool.draw(cfg.batch, rng);
        std::vector<PatchTokens> t1, t2;
        for (auto [t, s] : batch) {
            const auto& frame = ds.trajectories[static_cast<size_t>(t)].steps[static_cast<size_t>(s)].frame;
            t1.push_back(patchify(augment_view(frame, res, cfg, rng), 1, res, res, vit.patch, 1));
            t2.push_back(patchify(augment_view(frame, res, cfg, rng), 1, res, res, vit.patch, 1));
        }
        std::vector<const PatchTokens*> p1, p2;
        for (const auto& t : t1) p1.push_back(&t);
        for (const auto& t : t2) p2.push_back(&t);

        Tensor z1 = embed_views(stack_tokens(p1), t1[0].spatial_ids, t1[0].temporal_ids);
        Tensor z2 = embed_views(stack_tokens(p2), t2[0].spatial_ids, t2[0].temporal_ids);
        Tensor loss = scale(add(mean_all(cosine_similarity(predict(z1), z2.detach())),
                                mean_all(cosine_similarity(predict(z2), z1.detach()))),
                            -0.5);
        double lv = loss.item();
        if (step == 0) first_loss = lv;
        last_loss = lv;
        if (step % cfg.log_every == 0) curve.push_back({{"step", step}, {"loss", lv}});

        backward(loss);
        opt.step();
        opt.zero_grad();
    }

    PretrainResult out;
    out.checkpoint.family = EncoderFamily::AugSelfsup;
    out.checkpoint.vit = vit;
    out.checkpoint.backbone = std::move(backbone);
    out.checkpoint.backbone.freeze();
    log["initial_loss"] = first_loss;
    log["final_loss"] = last_loss;
    log["curve"] = curve;
    CollapseReport rep = encoder_collapse_report(out.checkpoint, ds);
    log["collapse"] = {{"min_std", rep.min_std}, {"mean_std", rep.mean_std}, {"flagged", rep.flagged}};
    out.collapse_flag = rep.flagged;
    out.checkpoint.train_meta = log;
    out.log = log;
    return out;
}

PretrainResult pretrain_lang_contrastive(const sim::Dataset& ds, const ViTConfig& vit_in, const PretrainConfig& cfg,
                                         uint64_t seed) {
    if (cfg.batch < 2) throw std::invalid_argument("pretrain_lang_contrastive: batch must be >= 2 for in-batch negatives");
    ViTConfig vit = vit_in;
    vit.tubelet = 1;
    vit.resolution = ds.config.resolution;

    SamplePool pool(ds, 0);
    if (pool.items.empty()) throw std::invalid_argument("pretrain_lang_contrastive: empty dataset");

    Rng rng(mix_seed(seed, 0x516ull));
    ViTBackbone backbone(vit, rng);
    const int C = vit.width;
    const int E = cfg.embed_dim;
    const int L = sim::kInstructionLength;
    const int V = static_cast<int>(sim::vocabulary().size());

    Linear img_proj(C, E, rng);
    EmbeddingL tok_embed(V, E, rng);
    Tensor txt_pos = Tensor::randn({L, E}, rng, 0.02).set_requires_grad();
    std::vector<TransformerBlock> txt_blocks;
    for (int i = 0; i < 2; ++i) txt_blocks.emplace_back(E, 4, 2 * E, rng);
    Tensor log_scale = Tensor::scalar(std::log(10.f)).set_requires_grad().set_name("siglip.log_scale");
    Tensor bias = Tensor::scalar(-10.f).set_requires_grad().set_name("siglip.bias");

    ParamList params;
    backbone.collect(params, "backbone");
    img_proj.collect(params, "img_proj");
    tok_embed.collect(params, "txt.embed");
    params.add("txt.pos", txt_pos);
    for (size_t i = 0; i < txt_blocks.size(); ++i) txt_blocks[i].collect(params, "txt.block" + std::to_string(i));
    params.add("siglip.log_scale", log_scale);
    params.add("siglip.bias", bias);
    for (auto& [name, t] : params.items) t.set_name(name);
    AdamW opt({ParamGroup{"pretrain", params.tensors(), cfg.lr, cfg.weight_decay}});

    const int res = vit.resolution;
    json log = base_log(ds, cfg, seed);
    log["objective"] = "pairwise_sigmoid_matching";
    json curve = json::array();

    auto image_embed = [&](const std::vector<const PatchTokens*>& clips, const std::vector<int>& sp,
                           const std::vector<int>& tp) {
        Rng no_drop(0);
        Tensor pooled = mean_axis(backbone.forward(stack_tokens(clips), sp, tp, true, no_drop), 1);
        return l2_normalize(img_proj.forward(pooled));
    };
    auto text_embed = [&](const std::vector<const std::vector<int>*>& instrs) {
        std::vector<int> flat;
        for (const auto* ids : instrs) {
            std::vector<int> padded = *ids;
            padded.resize(static_cast<size_t>(L), 0);
            flat.insert(flat.end(), padded.begin(), padded.end());
        }
        Tensor h = reshape(tok_embed.forward(flat), {static_cast<int64_t>(instrs.size()), L, E});
        h = add(h, txt_pos);
        Rng no_drop(0);
        for (const auto& blk : txt_blocks) h = blk.forward(h, nullptr, true, no_drop);
        return l2_normalize(mean_axis(h, 1));
    };
    auto pair_logits = [&](const Tensor& zi, const Tensor& zt) {
        return add(mul(matmul(zi, transpose(zt)), exp_op(log_scale)), bias);
    };

    // fixed probe pair monitored before/after training
    const auto& probe_traj = ds.trajectories[0];
    PatchTokens probe_tok = patchify(probe_traj.steps[0].frame, 1, res, res, vit.patch, 1);
    auto probe_logit = [&]() {
        Tensor zi = image_embed({&probe_tok}, probe_tok.spatial_ids, probe_tok.temporal_ids);
        Tensor zt = text_embed({&probe_traj.instruction});
        double cos = 0;
        for (int i = 0; i < E; ++i) cos += static_cast<double>(zi.data()[i]) * zt.data()[i];
        return cos * std::exp(static_cast<double>(log_scale.item())) + bias.item();
    };
    log["probe_logit_initial"] = probe_logit();

    double first_loss = 0, last_loss = 0;
    bool temp_bias_grads_nonzero = false;
    for (int step = 0; step < cfg.steps; ++step) {
        auto batch = pool.draw(cfg.batch, rng);
        std::vector<PatchTokens> toks;
        std::vector<const std::vector<int>*> instrs;
        for (auto [t, s] : batch) {
            toks.push_back(patchify(ds.trajectories[static_cast<size_t>(t)].steps[static_cast<size_t>(s)].frame, 1, res,
                                    res, vit.patch, 1));
            instrs.push_back(&ds.trajectories[static_cast<size_t>(t)].instruction);
        }
        std::vector<const PatchTokens*> ptrs;
        for (const auto& t : toks) ptrs.push_back(&t);

        Tensor logits = pair_logits(image_embed(ptrs, toks[0].spatial_ids, toks[0].temporal_ids), text_embed(instrs));
        Tensor loss = pairwise_sigmoid_loss(logits);
        double lv = loss.item();
        if (step == 0) first_loss = lv;
        last_loss = lv;
        if (step % cfg.log_every == 0) curve.push_back({{"step", step}, {"loss", lv}});

        backward(loss);
        if (step == 0)
            temp_bias_grads_nonzero = log_scale.has_grad() && log_scale.grad()[0] != 0.f && bias.has_grad() &&
                                      bias.grad()[0] != 0.f;
        opt.step();
        opt.zero_grad();
    }

    log["probe_logit_final"] = probe_logit();

    PretrainResult out;
    out.checkpoint.family = EncoderFamily::LangContrastive;
    out.checkpoint.vit = vit;
    out.checkpoint.backbone = std::move(backbone);
    out.checkpoint.backbone.freeze();
    log["temp_bias_grads_nonzero"] = temp_bias_grads_nonzero;
    log["initial_loss"] = first_loss;
    log["final_loss"] = last_loss;
    log["curve"] = curve;
    CollapseReport rep = encoder_collapse_report(out.checkpoint, ds);
    log["collapse"] = {{"min_std", rep.min_std}, {"mean_std", rep.mean_std}, {"flagged", rep.flagged}};
    out.collapse_flag = rep.flagged;
    out.checkpoint.train_meta = log;
    out.log = log;
    return out;
}

CollapseReport collapse_metric(const std::vector<std::vector<float>>& pooled) {
    if (pooled.size() < 100)
        throw std::invalid_argument("collapse_metric: need >= 100 feature vectors, got " + std::to_string(pooled.size()));
    size_t dim = pooled[0].size();
    CollapseReport rep;
    rep.per_dim_std.resize(dim);
    double mean_acc = 0;
    float mn = std::numeric_limits<float>::max();
    for (size_t d = 0; d < dim; ++d) {
        double m = 0, m2 = 0;
        for (const auto& v : pooled) {
            m += v[d];
            m2 += static_cast<double>(v[d]) * v[d];
        }
        m /= static_cast<double>(pooled.size());
        m2 /= static_cast<double>(pooled.size());
        float sd = static_cast<float>(std::sqrt(std::max(0.0, m2 - m * m)));
        rep.per_dim_std[d] = sd;
        mean_acc += sd;
        mn = std::min(mn, sd);
    }
    rep.min_std = mn;
    rep.mean_std = static_cast<float>(mean_acc / static_cast<double>(dim));
    rep.flagged = rep.mean_std < 0.01f;
    return rep;
}

CollapseReport encoder_collapse_report(const EncoderCheckpoint& ck, const sim::Dataset& ds, int max_samples) {
    size_t total = 0;
    for (const auto& traj : ds.trajectories) total += traj.steps.size();
    size_t stride = std::max<size_t>(1, total / static_cast<size_t>(max_samples));
    std::vector<std::pair<int, int>> samples;
    for (size_t t = 0; t < ds.trajectories.size() && static_cast<int>(samples.size()) < max_samples; ++t)
        for (size_t s = 0; s < ds.trajectories[t].steps.size() && static_cast<int>(samples.size()) < max_samples;
             s += stride)
            samples.emplace_back(static_cast<int>(t), static_cast<int>(s));
    std::vector<std::vector<float>> pooled;
    const int C = ck.feature_width();
    for (size_t ofs = 0; ofs < samples.size(); ofs += 32) {
        std::vector<std::pair<const std::vector<float>*, const std::vector<float>*>> clips;
        for (size_t i = ofs; i < std::min(ofs + 32, samples.size()); ++i) {
            auto [t, s] = samples[i];
            const auto& traj = ds.trajectories[static_cast<size_t>(t)];
            const auto& cur = traj.steps[static_cast<size_t>(s)].frame;
            const auto& prev = s > 0 ? traj.steps[static_cast<size_t>(s - 1)].frame : cur;
            clips.emplace_back(&prev, &cur);
        }
        Tensor feats = encode_batch(ck, clips);  // [B, N, C]
        int64_t n = feats.dim(1);
        for (int64_t b = 0; b < feats.dim(0); ++b) {
            std::vector<float> v(static_cast<size_t>(C), 0.f);
            for (int64_t tok = 0; tok < n; ++tok)
                for (int64_t c = 0; c < C; ++c) v[static_cast<size_t>(c)] += feats.data()[(b * n + tok) * C + c];
            for (auto& x : v) x /= static_cast<float>(n);
            pooled.push_back(std::move(v));
        }
    }
    return collapse_metric(pooled);
}

}  // namespace vlalab::enc
