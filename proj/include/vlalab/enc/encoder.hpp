#pragma once

#include <string>

#include <json.hpp>

#include "vlalab/enc/vit.hpp"

namespace vlalab::enc {

using json = nlohmann::json;

enum class EncoderFamily { VideoPredictive, AugSelfsup, LangContrastive };

std::string family_name(EncoderFamily f);
EncoderFamily parse_family(const std::string& name);

// Frozen encoder plus its feature signature. The video family maps a 2-frame
// clip to one token set; image families encode each frame separately and
// concatenate the two token sets.
struct EncoderCheckpoint {
    EncoderFamily family = EncoderFamily::VideoPredictive;
    ViTConfig vit;
    ViTBackbone backbone;
    json train_meta;

    int feature_tokens() const {
        int g = vit.grid() * vit.grid();
        return family == EncoderFamily::VideoPredictive ? g : 2 * g;
    }
    int feature_width() const { return vit.width; }
    std::string id() const;
};

// h_t from the two most recent frames; deterministic, no parameter updates.
// Rejects frames whose size does not match the checkpoint resolution.
Tensor encode(const EncoderCheckpoint& ck, const std::vector<float>& frame_prev, const std::vector<float>& frame_cur);

// Batched variant: clips[i] = (prev, cur); returns [B, N, C].
Tensor encode_batch(const EncoderCheckpoint& ck,
                    const std::vector<std::pair<const std::vector<float>*, const std::vector<float>*>>& clips);

void save_encoder(const std::string& path, const EncoderCheckpoint& ck);
EncoderCheckpoint load_encoder(const std::string& path);

}  // namespace vlalab::enc
