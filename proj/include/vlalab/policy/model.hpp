#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vlalab/core/nn.hpp"
#include "vlalab/enc/encoder.hpp"
#include "vlalab/policy/codec.hpp"

namespace vlalab::policy {

using core::Rng;
using core::Tensor;
using json = nlohmann::json;

enum class ActionMode { Discrete256, ContinuousChunk };
enum class FusionMode { None, Early, Gated };

std::string action_mode_name(ActionMode m);
ActionMode parse_action_mode(const std::string& s);
std::string fusion_name(FusionMode f);
FusionMode parse_fusion(const std::string& s);

struct PolicyConfig {
    int layers = 8;
    int width = 128;
    int heads = 4;
    int ff_dim = 256;
    ActionMode action_mode = ActionMode::ContinuousChunk;
    int chunk = 10;
    FusionMode fusion = FusionMode::None;
    int gated_interval = 2;  // desk default; 8 reproduces the sparse paper preset
    double base_lr = 5e-4;
    double fusion_lr = 1e-4;  // must stay below base_lr for gated fusion
    double weight_decay = 1e-5;
    int batch = 16;
    int train_steps = 3000;
    int resolution = 32;
    int patch = 8;
    int instr_len = 8;
    // feature signature of the linked encoder; 0 when fusion = none
    int feat_tokens = 0;
    int feat_width = 0;

    int action_dims() const { return ActionCodec::kDims; }
    int action_slots() const {
        return action_mode == ActionMode::Discrete256 ? chunk * action_dims() : chunk;
    }
    int img_tokens() const { return (resolution / patch) * (resolution / patch); }
    void validate() const;
};

void to_json(json& j, const PolicyConfig& c);
void from_json(const json& j, PolicyConfig& c);

// Sequence layout: [language | image patches | proprio | fused features
// (early only) | action slots].
struct SeqLayout {
    int lang_ofs = 0, lang_len = 0;
    int img_ofs = 0, img_len = 0;
    int proprio_ofs = 0;
    int fused_ofs = 0, fused_len = 0;
    int action_ofs = 0, action_len = 0;
    int total = 0;
};

SeqLayout make_layout(const PolicyConfig& cfg);

// Additive mask: action slot i sees every non-action token and slots j <= i;
// non-action tokens never see action slots.
Tensor causal_action_mask(const SeqLayout& layout);

// One training/eval batch, already raster-encoded.
struct PolicyInputs {
    std::vector<int> lang;  // B * instr_len token ids, padded
    Tensor img_tokens;      // [B, img_tokens, patch*patch*3]
    Tensor proprio;         // [B, 3] (gripper x, y, holding flag)
    Tensor features;        // [B, feat_tokens, feat_width] when fusion != none
    int batch = 0;
};

// Rejects empty or overlong instructions; pads to instr_len.
std::vector<int> prepare_instruction(const std::vector<int>& tokens, int instr_len);

struct GatedXAttn {
    core::LayerNormLT<float> ln;
    core::MultiHeadAttention xattn;
    Tensor gate;  // scalar, tanh-squashed, initialized to 0

    GatedXAttn() = default;
    GatedXAttn(int width, int heads, Rng& rng);
    // hidden + tanh(gate) * XAttn(LN(hidden); features)
    Tensor forward(const Tensor& hidden, const Tensor& features) const;
    void collect(core::ParamList& ps, const std::string& prefix) const;
};

struct PolicyModel {
    PolicyConfig cfg;
    SeqLayout layout;
    core::EmbeddingL tok_embed;
    core::Linear patch_embed;
    core::Linear proprio_embed;
    Tensor action_queries;  // [action_slots, width]
    Tensor pos_embed;       // [total, width]
    core::EmbeddingL seg_embed;  // 5 segments: lang, img, proprio, fused, action
    core::Linear feat_proj;      // feature width -> model width (early/gated)
    std::vector<GatedXAttn> gated;          // at 1-indexed layer multiples of gated_interval
    std::vector<core::TransformerBlock> blocks;
    core::LayerNormLT<float> ln_final;
    core::Linear head;
    Tensor mask;

    PolicyModel() = default;
    PolicyModel(const PolicyConfig& cfg, Rng& rng);

    // [B, total, width]; set apply_fusion=false to run the fusion-free
    // baseline path on identical weights.
    Tensor forward_hidden(const PolicyInputs& in, bool train, Rng& rng, bool apply_fusion = true) const;

    // discrete: [B, action_slots, 256] logits; continuous: [B, chunk, 3]
    Tensor forward_actions(const PolicyInputs& in, bool train, Rng& rng, bool apply_fusion = true) const;

    // parameters split by optimizer group; fusion group is empty unless gated
    core::ParamList base_params() const;
    core::ParamList fusion_params() const;
    core::ParamList all_params() const;
};

struct PolicyCheckpoint {
    PolicyConfig config;
    ActionCodec codec;
    std::string encoder_id;  // set iff fusion != none
    json train_log;
    PolicyModel model;
};

void save_policy(const std::string& path, const PolicyCheckpoint& ck);
PolicyCheckpoint load_policy(const std::string& path);

}  // namespace vlalab::policy
