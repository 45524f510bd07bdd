#include "vlalab/policy/train.hpp"

#include "vlalab/core/optim.hpp"
#include "vlalab/enc/vit.hpp"

namespace vlalab::policy {

using namespace core;

std::vector<sim::Action> chunk_targets(const sim::Trajectory& traj, size_t step, int chunk) {
    std::vector<sim::Action> out;
    out.reserve(static_cast<size_t>(chunk));
    for (int i = 0; i < chunk; ++i) {
        size_t idx = std::min(step + static_cast<size_t>(i), traj.steps.size() - 1);
        out.push_back(traj.steps[idx].action);
    }
    return out;
}

PolicyCheckpoint train_bc(const sim::Dataset& ds, const enc::EncoderCheckpoint* encoder, PolicyConfig cfg,
                          uint64_t seed) {
    if (cfg.fusion != FusionMode::None && encoder == nullptr)
        throw std::invalid_argument("train_bc: fusion=" + fusion_name(cfg.fusion) + " requires a frozen encoder");
    cfg.resolution = ds.config.resolution;
    if (encoder) {
        cfg.feat_tokens = encoder->feature_tokens();
        cfg.feat_width = encoder->feature_width();
    }
    cfg.validate();

    Rng rng(mix_seed(seed, 0xbc7ull));
    PolicyModel model(cfg, rng);
    ActionCodec codec;

    ParamList base = model.base_params();
    ParamList fusion = model.fusion_params();
    for (auto& [name, t] : base.items) t.set_name(name);
    for (auto& [name, t] : fusion.items) t.set_name(name);
    std::vector<ParamGroup> groups = {ParamGroup{"base", base.tensors(), cfg.base_lr, cfg.weight_decay}};
    if (!fusion.items.empty()) groups.push_back(ParamGroup{"fusion", fusion.tensors(), cfg.fusion_lr, cfg.weight_decay});
    AdamW opt(std::move(groups));

    // frozen-feature cache over every step of the training set
    std::vector<std::vector<const float*>> feat_ptrs;  // unused; features stored per (traj,step)
    std::vector<std::vector<std::vector<float>>> features;
    if (encoder) {
        features.resize(ds.trajectories.size());
        for (size_t t = 0; t < ds.trajectories.size(); ++t) {
            const auto& traj = ds.trajectories[t];
            features[t].resize(traj.steps.size());
            for (size_t ofs = 0; ofs < traj.steps.size(); ofs += 32) {
                std::vector<std::pair<const std::vector<float>*, const std::vector<float>*>> clips;
                for (size_t s = ofs; s < std::min(ofs + 32, traj.steps.size()); ++s) {
                    const auto& cur = traj.steps[s].frame;
                    const auto& prev = s > 0 ? traj.steps[s - 1].frame : cur;
                    clips.emplace_back(&prev, &cur);
                }
                Tensor f = enc::encode_batch(*encoder, clips);
                size_t per = static_cast<size_t>(f.dim(1)) * f.dim(2);
                for (size_t i = 0; i < clips.size(); ++i)
                    features[t][ofs + i].assign(f.data() + i * per, f.data() + (i + 1) * per);
            }
        }
    }

    std::vector<std::pair<int, int>> pool;
    for (size_t t = 0; t < ds.trajectories.size(); ++t)
        for (size_t s = 0; s < ds.trajectories[t].steps.size(); ++s)
            pool.emplace_back(static_cast<int>(t), static_cast<int>(s));
    size_t cursor = 0;

    const int res = cfg.resolution;
    const int n_img = cfg.img_tokens();
    const int patch_dim = cfg.patch * cfg.patch * 3;
    json curve = json::array();
    double first_loss = 0, last_loss = 0;

    const int warmup = std::min(100, cfg.train_steps / 10 + 1);
    for (int step = 0; step < cfg.train_steps; ++step) {
        opt.set_lr_scale(step < warmup ? static_cast<double>(step + 1) / warmup : 1.0);
        PolicyInputs in;
        in.batch = cfg.batch;
        in.img_tokens = Tensor::zeros({cfg.batch, n_img, patch_dim});
        in.proprio = Tensor::zeros({cfg.batch, 3});
        if (encoder) in.features = Tensor::zeros({cfg.batch, cfg.feat_tokens, cfg.feat_width});
        std::vector<std::vector<sim::Action>> targets;

        for (int b = 0; b < cfg.batch; ++b) {
            if (cursor == 0) rng.shuffle(pool);
            auto [t, s] = pool[cursor];
            cursor = (cursor + 1) % pool.size();
            const auto& traj = ds.trajectories[static_cast<size_t>(t)];
            const auto& rec = traj.steps[static_cast<size_t>(s)];

            std::vector<int> lang = prepare_instruction(traj.instruction, cfg.instr_len);
            in.lang.insert(in.lang.end(), lang.begin(), lang.end());

            enc::PatchTokens pt = enc::patchify(rec.frame, 1, res, res, cfg.patch, 1);
            std::copy(pt.tokens.begin(), pt.tokens.end(),
                      in.img_tokens.data() + static_cast<size_t>(b) * n_img * patch_dim);

            float* pp = in.proprio.data() + static_cast<size_t>(b) * 3;
            pp[0] = rec.state.gripper.x;
            pp[1] = rec.state.gripper.y;
            pp[2] = rec.state.holding ? 1.f : 0.f;

            if (encoder) {
                const auto& f = features[static_cast<size_t>(t)][static_cast<size_t>(s)];
                std::copy(f.begin(), f.end(),
                          in.features.data() + static_cast<size_t>(b) * cfg.feat_tokens * cfg.feat_width);
            }
            targets.push_back(chunk_targets(traj, static_cast<size_t>(s), cfg.chunk));
        }

        Tensor out = model.forward_actions(in, true, rng);
        Tensor loss;
        if (cfg.action_mode == ActionMode::ContinuousChunk) {
            // regression happens on the per-dimension unit scale
            Tensor y = Tensor::zeros({cfg.batch, cfg.chunk, 3});
            for (int b = 0; b < cfg.batch; ++b)
                for (int i = 0; i < cfg.chunk; ++i) {
                    float* p = y.data() + (static_cast<size_t>(b) * cfg.chunk + i) * 3;
                    auto unit = codec.to_unit(targets[static_cast<size_t>(b)][static_cast<size_t>(i)]);
                    p[0] = unit[0];
                    p[1] = unit[1];
                    p[2] = unit[2];
                }
            loss = l1_loss(out, y);
        } else {
            std::vector<int> token_targets;
            for (int b = 0; b < cfg.batch; ++b)
                for (int i = 0; i < cfg.chunk; ++i) {
                    auto toks = codec.quantize(targets[static_cast<size_t>(b)][static_cast<size_t>(i)]);
                    token_targets.insert(token_targets.end(), toks.begin(), toks.end());
                }
            Tensor logits = reshape(out, {static_cast<int64_t>(cfg.batch) * cfg.action_slots(), ActionCodec::kBins});
            loss = cross_entropy(logits, token_targets);
        }

        double lv = loss.item();
        if (step == 0) first_loss = lv;
        last_loss = lv;
        if (step % 25 == 0) curve.push_back({{"step", step}, {"loss", lv}});

        backward(loss);
        opt.step();
        opt.zero_grad();
    }

    PolicyCheckpoint ck;
    ck.config = cfg;
    ck.codec = codec;
    ck.encoder_id = encoder ? encoder->id() : "";
    ck.model = std::move(model);
    json log;
    log["dataset"] = ds.id();
    log["seed"] = seed;
    log["initial_loss"] = first_loss;
    log["final_loss"] = last_loss;
    log["curve"] = curve;
    json manifest;
    json base_names = json::array(), fusion_names = json::array();
    for (const auto& [name, t] : base.items) base_names.push_back(name);
    for (const auto& [name, t] : fusion.items) fusion_names.push_back(name);
    manifest["base"] = base_names;
    manifest["fusion"] = fusion_names;
    manifest["base_lr"] = cfg.base_lr;
    manifest["fusion_lr"] = cfg.fusion_lr;
    log["optimizer_groups"] = manifest;
    ck.train_log = log;
    return ck;
}

}  // namespace vlalab::policy
