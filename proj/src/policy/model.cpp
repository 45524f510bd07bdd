#include "vlalab/policy/model.hpp"

#include <cmath>
#include <limits>

#include "vlalab/core/serialize.hpp"
#include "vlalab/sim/instruction.hpp"

namespace vlalab::policy {

using namespace core;

std::string action_mode_name(ActionMode m) { return m == ActionMode::Discrete256 ? "discrete256" : "continuous_chunk"; }

ActionMode parse_action_mode(const std::string& s) {
    if (s == "discrete256") return ActionMode::Discrete256;
    if (s == "continuous_chunk") return ActionMode::ContinuousChunk;
    throw std::invalid_argument("unknown action mode '" + s + "' (expected discrete256|continuous_chunk)");
}

std::string fusion_name(FusionMode f) {
    switch (f) {
        case FusionMode::None: return "none";
        case FusionMode::Early: return "early";
        default: return "gated";
    }
}

FusionMode parse_fusion(const std::string& s) {
    if (s == "none") return FusionMode::None;
    if (s == "early") return FusionMode::Early;
    if (s == "gated") return FusionMode::Gated;
    throw std::invalid_argument("unknown fusion mode '" + s + "' (expected none|early|gated)");
}

void PolicyConfig::validate() const {
    if (chunk < 1) throw std::invalid_argument("policy config: chunk size must be >= 1");
    if (gated_interval < 1 || gated_interval > layers)
        throw std::invalid_argument("policy config: gated interval " + std::to_string(gated_interval) +
                                    " must lie in [1, layers=" + std::to_string(layers) + "]");
    if (fusion == FusionMode::Gated && fusion_lr >= base_lr)
        throw std::invalid_argument("policy config: fusion learning rate must stay below the base learning rate");
    if (fusion != FusionMode::None && (feat_tokens <= 0 || feat_width <= 0))
        throw std::invalid_argument("policy config: fusion requires the encoder feature signature");
}

void to_json(json& j, const PolicyConfig& c) {
    j = json{{"layers", c.layers},
             {"width", c.width},
             {"heads", c.heads},
             {"ff_dim", c.ff_dim},
             {"action_mode", action_mode_name(c.action_mode)},
             {"chunk", c.chunk},
             {"fusion", fusion_name(c.fusion)},
             {"gated_interval", c.gated_interval},
             {"base_lr", c.base_lr},
             {"fusion_lr", c.fusion_lr},
             {"weight_decay", c.weight_decay},
             {"batch", c.batch},
             {"train_steps", c.train_steps},
             {"resolution", c.resolution},
             {"patch", c.patch},
             {"instr_len", c.instr_len},
             {"feat_tokens", c.feat_tokens},
             {"feat_width", c.feat_width}};
}

void from_json(const json& j, PolicyConfig& c) {
    c.layers = j.at("layers");
    c.width = j.at("width");
    c.heads = j.at("heads");
    c.ff_dim = j.at("ff_dim");
    c.action_mode = parse_action_mode(j.at("action_mode"));
    c.chunk = j.at("chunk");
    c.fusion = parse_fusion(j.at("fusion"));
    c.gated_interval = j.at("gated_interval");
    c.base_lr = j.at("base_lr");
    c.fusion_lr = j.at("fusion_lr");
    c.weight_decay = j.at("weight_decay");
    c.batch = j.at("batch");
    c.train_steps = j.at("train_steps");
    c.resolution = j.at("resolution");
    c.patch = j.at("patch");
    c.instr_len = j.at("instr_len");
    c.feat_tokens = j.at("feat_tokens");
    c.feat_width = j.at("feat_width");
}

SeqLayout make_layout(const PolicyConfig& cfg) {
    SeqLayout l;
    l.lang_ofs = 0;
    l.lang_len = cfg.instr_len;
    l.img_ofs = l.lang_ofs + l.lang_len;
    l.img_len = cfg.img_tokens();
    l.proprio_ofs = l.img_ofs + l.img_len;
    l.fused_ofs = l.proprio_ofs + 1;
    l.fused_len = cfg.fusion == FusionMode::Early ? cfg.feat_tokens : 0;
    l.action_ofs = l.fused_ofs + l.fused_len;
    l.action_len = cfg.action_slots();
    l.total = l.action_ofs + l.action_len;
    return l;
}

Tensor causal_action_mask(const SeqLayout& layout) {
    const float ninf = -std::numeric_limits<float>::infinity();
    Tensor m = Tensor::zeros({layout.total, layout.total});
    for (int q = 0; q < layout.total; ++q) {
        bool q_action = q >= layout.action_ofs;
        for (int kv = layout.action_ofs; kv < layout.total; ++kv) {
            bool allowed = q_action && kv <= q;
            if (!allowed) m.data()[static_cast<size_t>(q) * layout.total + kv] = ninf;
        }
    }
    return m;
}

std::vector<int> prepare_instruction(const std::vector<int>& tokens, int instr_len) {
    if (tokens.empty()) throw std::invalid_argument("policy: empty instruction");
    if (static_cast<int>(tokens.size()) > instr_len)
        throw std::invalid_argument("policy: instruction with " + std::to_string(tokens.size()) +
                                    " tokens exceeds the " + std::to_string(instr_len) + "-token budget");
    std::vector<int> out = tokens;
    out.resize(static_cast<size_t>(instr_len), 0);
    return out;
}

GatedXAttn::GatedXAttn(int width, int heads, Rng& rng) : ln(width), xattn(width, heads, rng) {
    gate = Tensor::zeros({1}).set_requires_grad().set_name("gate");
}

Tensor GatedXAttn::forward(const Tensor& hidden, const Tensor& features) const {
    Tensor attended = xattn.forward(ln.forward(hidden), features, nullptr);
    return add(hidden, mul(attended, tanh_op(gate)));
}

void GatedXAttn::collect(ParamList& ps, const std::string& prefix) const {
    ln.collect(ps, prefix + ".ln");
    xattn.collect(ps, prefix + ".xattn");
    ps.add(prefix + ".gate", gate);
}

PolicyModel::PolicyModel(const PolicyConfig& c, Rng& rng) : cfg(c) {
    cfg.validate();
    layout = make_layout(cfg);
    tok_embed = EmbeddingL(static_cast<int64_t>(sim::vocabulary().size()), cfg.width, rng);
    patch_embed = Linear(cfg.patch * cfg.patch * 3, cfg.width, rng);
    proprio_embed = Linear(3, cfg.width, rng);
    action_queries = Tensor::randn({cfg.action_slots(), cfg.width}, rng, 0.02).set_requires_grad();
    pos_embed = Tensor::randn({layout.total, cfg.width}, rng, 0.02).set_requires_grad();
    seg_embed = EmbeddingL(5, cfg.width, rng);
    if (cfg.fusion != FusionMode::None) feat_proj = Linear(cfg.feat_width, cfg.width, rng);
    double res_scale = 1.0 / std::sqrt(2.0 * cfg.layers);
    for (int i = 0; i < cfg.layers; ++i) blocks.emplace_back(cfg.width, cfg.heads, cfg.ff_dim, rng, 0.0, res_scale);
    if (cfg.fusion == FusionMode::Gated)
        for (int i = 1; i <= cfg.layers; ++i)
            if (i % cfg.gated_interval == 0) gated.emplace_back(cfg.width, cfg.heads, rng);
    ln_final = LayerNormLT<float>(cfg.width);
    int head_out = cfg.action_mode == ActionMode::Discrete256 ? ActionCodec::kBins : cfg.action_dims();
    head = Linear(cfg.width, head_out, rng);
    mask = causal_action_mask(layout);
}

Tensor PolicyModel::forward_hidden(const PolicyInputs& in, bool train, Rng& rng, bool apply_fusion) const {
    int64_t b = in.batch;
    if (cfg.fusion != FusionMode::None && apply_fusion && !in.features.defined())
        throw std::invalid_argument("policy: fusion=" + fusion_name(cfg.fusion) + " requires encoder features");

    Tensor lang = reshape(tok_embed.forward(in.lang), {b, cfg.instr_len, cfg.width});
    Tensor img = patch_embed.forward(in.img_tokens);
    Tensor prop = reshape(proprio_embed.forward(in.proprio), {b, 1, cfg.width});
    Tensor acts = add(Tensor::zeros({b, cfg.action_slots(), cfg.width}), action_queries);

    std::vector<Tensor> parts = {lang, img, prop};
    if (cfg.fusion == FusionMode::Early) parts.push_back(feat_proj.forward(in.features));
    parts.push_back(acts);
    Tensor h = concat<float>(parts, 1);

    std::vector<int> seg_ids(static_cast<size_t>(layout.total), 0);
    for (int i = layout.img_ofs; i < layout.img_ofs + layout.img_len; ++i) seg_ids[static_cast<size_t>(i)] = 1;
    seg_ids[static_cast<size_t>(layout.proprio_ofs)] = 2;
    for (int i = layout.fused_ofs; i < layout.fused_ofs + layout.fused_len; ++i) seg_ids[static_cast<size_t>(i)] = 3;
    for (int i = layout.action_ofs; i < layout.total; ++i) seg_ids[static_cast<size_t>(i)] = 4;
    h = add(h, add(pos_embed, seg_embed.forward(seg_ids)));

    Tensor feat_kv;
    bool use_gated = cfg.fusion == FusionMode::Gated && apply_fusion;
    if (use_gated) feat_kv = feat_proj.forward(in.features);

    size_t g = 0;
    for (int i = 0; i < cfg.layers; ++i) {
        if (use_gated && (i + 1) % cfg.gated_interval == 0 && g < gated.size()) {
            h = gated[g].forward(h, feat_kv);
            ++g;
        }
        h = blocks[static_cast<size_t>(i)].forward(h, &mask, train, rng);
    }
    return ln_final.forward(h);
}

Tensor PolicyModel::forward_actions(const PolicyInputs& in, bool train, Rng& rng, bool apply_fusion) const {
    Tensor h = forward_hidden(in, train, rng, apply_fusion);
    Tensor slots = slice(h, 1, layout.action_ofs, layout.action_len);
    Tensor out = head.forward(slots);
    if (cfg.action_mode == ActionMode::ContinuousChunk) return out;  // [B, chunk, 3]
    return out;                                                      // [B, chunk*dims, 256]
}

ParamList PolicyModel::base_params() const {
    ParamList ps;
    tok_embed.collect(ps, "policy.tok_embed");
    patch_embed.collect(ps, "policy.patch_embed");
    proprio_embed.collect(ps, "policy.proprio_embed");
    ps.add("policy.action_queries", action_queries);
    ps.add("policy.pos_embed", pos_embed);
    seg_embed.collect(ps, "policy.seg_embed");
    // the early-fusion projection trains at the base learning rate
    if (cfg.fusion == FusionMode::Early) feat_proj.collect(ps, "policy.feat_proj");
    for (size_t i = 0; i < blocks.size(); ++i) blocks[i].collect(ps, "policy.block" + std::to_string(i));
    ln_final.collect(ps, "policy.ln_final");
    head.collect(ps, "policy.head");
    return ps;
}

ParamList PolicyModel::fusion_params() const {
    ParamList ps;
    if (cfg.fusion == FusionMode::Gated) {
        feat_proj.collect(ps, "policy.feat_proj");
        for (size_t i = 0; i < gated.size(); ++i) gated[i].collect(ps, "policy.gated" + std::to_string(i));
    }
    return ps;
}

ParamList PolicyModel::all_params() const {
    ParamList ps = base_params();
    ParamList fs = fusion_params();
    for (auto& item : fs.items) ps.items.push_back(item);
    return ps;
}

void save_policy(const std::string& path, const PolicyCheckpoint& ck) {
    ParamList ps = ck.model.all_params();
    json meta;
    meta["kind"] = "policy";
    json cfg;
    to_json(cfg, ck.config);
    meta["config"] = cfg;
    json codec;
    for (const auto& [lo, hi] : ck.codec.bounds) codec.push_back({lo, hi});
    meta["codec_bounds"] = codec;
    meta["encoder_id"] = ck.encoder_id;
    meta["train"] = ck.train_log;
    save_checkpoint(path, meta, ps.items);
}

PolicyCheckpoint load_policy(const std::string& path) {
    Checkpoint raw = load_checkpoint(path);
    if (!raw.meta.contains("kind") || raw.meta["kind"] != "policy")
        throw std::runtime_error("load_policy: '" + path + "' is not a policy checkpoint");
    PolicyCheckpoint ck;
    from_json(raw.meta.at("config"), ck.config);
    for (size_t d = 0; d < ActionCodec::kDims; ++d) {
        ck.codec.bounds[d] = {raw.meta.at("codec_bounds")[d][0].get<float>(), raw.meta.at("codec_bounds")[d][1].get<float>()};
    }
    ck.encoder_id = raw.meta.value("encoder_id", "");
    ck.train_log = raw.meta.value("train", json::object());
    Rng init(0);
    ck.model = PolicyModel(ck.config, init);
    ParamList ps = ck.model.all_params();
    load_into(raw, ps.items);
    return ck;
}

}  // namespace vlalab::policy
