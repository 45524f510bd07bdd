#include "vlalab/enc/encoder.hpp"

#include <stdexcept>

#include "vlalab/core/serialize.hpp"

namespace vlalab::enc {

using namespace core;

std::string family_name(EncoderFamily f) {
    switch (f) {
        case EncoderFamily::VideoPredictive: return "video_predictive";
        case EncoderFamily::AugSelfsup: return "aug_selfsup";
        default: return "lang_contrastive";
    }
}

EncoderFamily parse_family(const std::string& name) {
    if (name == "video_predictive") return EncoderFamily::VideoPredictive;
    if (name == "aug_selfsup") return EncoderFamily::AugSelfsup;
    if (name == "lang_contrastive") return EncoderFamily::LangContrastive;
    throw std::invalid_argument("unknown encoder family '" + name +
                                "' (expected video_predictive|aug_selfsup|lang_contrastive)");
}

std::string EncoderCheckpoint::id() const {
    json j = train_meta;
    j["family"] = family_name(family);
    return hash_hex(j.dump());
}

namespace {

json vit_to_json(const ViTConfig& c) {
    return json{{"patch", c.patch},   {"tubelet", c.tubelet}, {"width", c.width},
                {"depth", c.depth},   {"heads", c.heads},     {"ff_dim", c.ff_dim},
                {"resolution", c.resolution}, {"context_frames", c.context_frames}};
}

ViTConfig vit_from_json(const json& j) {
    ViTConfig c;
    c.patch = j.at("patch");
    c.tubelet = j.at("tubelet");
    c.width = j.at("width");
    c.depth = j.at("depth");
    c.heads = j.at("heads");
    c.ff_dim = j.at("ff_dim");
    c.resolution = j.at("resolution");
    c.context_frames = j.at("context_frames");
    return c;
}

void check_frame(const EncoderCheckpoint& ck, const std::vector<float>& f, const char* which) {
    size_t want = static_cast<size_t>(ck.vit.resolution) * ck.vit.resolution * 3;
    if (f.size() != want)
        throw std::invalid_argument(std::string("encode: ") + which + " frame has " + std::to_string(f.size()) +
                                    " floats, checkpoint expects resolution " + std::to_string(ck.vit.resolution));
}

}  // namespace

Tensor encode_batch(const EncoderCheckpoint& ck,
                    const std::vector<std::pair<const std::vector<float>*, const std::vector<float>*>>& clips) {
    if (clips.empty()) throw std::invalid_argument("encode_batch: empty batch");
    int res = ck.vit.resolution;
    Rng no_rng(0);  // dropout off; never consumed

    std::vector<PatchTokens> toks;
    toks.reserve(clips.size() * 2);
    std::vector<const PatchTokens*> ptrs;

    if (ck.family == EncoderFamily::VideoPredictive) {
        std::vector<float> clip(static_cast<size_t>(res) * res * 3 * 2);
        for (const auto& [prev, cur] : clips) {
            check_frame(ck, *prev, "previous");
            check_frame(ck, *cur, "current");
            std::copy(prev->begin(), prev->end(), clip.begin());
            std::copy(cur->begin(), cur->end(), clip.begin() + static_cast<int64_t>(prev->size()));
            toks.push_back(patchify(clip, 2, res, res, ck.vit.patch, ck.vit.tubelet));
        }
        for (const auto& t : toks) ptrs.push_back(&t);
        Tensor x = stack_tokens(ptrs);
        return ck.backbone.forward(x, toks[0].spatial_ids, toks[0].temporal_ids, false, no_rng);
    }

    // image families: encode each frame independently, concatenate token sets
    for (const auto& [prev, cur] : clips) {
        check_frame(ck, *prev, "previous");
        check_frame(ck, *cur, "current");
        toks.push_back(patchify(*prev, 1, res, res, ck.vit.patch, 1));
        toks.push_back(patchify(*cur, 1, res, res, ck.vit.patch, 1));
    }
    for (const auto& t : toks) ptrs.push_back(&t);
    Tensor x = stack_tokens(ptrs);  // [2B, n1, dim]
    Tensor h = ck.backbone.forward(x, toks[0].spatial_ids, toks[0].temporal_ids, false, no_rng);
    // [2B, n1, C] -> [B, 2*n1, C]
    return reshape(h, {static_cast<int64_t>(clips.size()), 2 * h.dim(1), h.dim(2)});
}

Tensor encode(const EncoderCheckpoint& ck, const std::vector<float>& frame_prev, const std::vector<float>& frame_cur) {
    Tensor batched = encode_batch(ck, {{&frame_prev, &frame_cur}});
    return reshape(batched, {batched.dim(1), batched.dim(2)});
}

void save_encoder(const std::string& path, const EncoderCheckpoint& ck) {
    ParamList ps;
    ck.backbone.collect(ps, "backbone");
    json meta;
    meta["kind"] = "encoder";
    meta["family"] = family_name(ck.family);
    meta["vit"] = vit_to_json(ck.vit);
    meta["train"] = ck.train_meta;
    save_checkpoint(path, meta, ps.items);
}

EncoderCheckpoint load_encoder(const std::string& path) {
    Checkpoint raw = load_checkpoint(path);
    if (!raw.meta.contains("kind") || raw.meta["kind"] != "encoder")
        throw std::runtime_error("load_encoder: '" + path + "' is not an encoder checkpoint");
    EncoderCheckpoint ck;
    ck.family = parse_family(raw.meta.at("family"));
    ck.vit = vit_from_json(raw.meta.at("vit"));
    ck.train_meta = raw.meta.value("train", json::object());
    Rng init(0);
    ck.backbone = ViTBackbone(ck.vit, init);
    ParamList ps;
    ck.backbone.collect(ps, "backbone");
    load_into(raw, ps.items);
    ck.backbone.freeze();
    return ck;
}

}  // namespace vlalab::enc
