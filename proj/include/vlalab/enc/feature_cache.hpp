#pragma once

#include <string>
#include <unordered_map>

#include "vlalab/enc/encoder.hpp"
#include "vlalab/sim/dataset.hpp"

namespace vlalab::enc {

// One binary file per (dataset, encoder): magic, JSON index block mapping
// (trajectory, step) -> payload offset, then raw N*C float payloads.
// A hit is bit-identical to recomputing encode() on the stored frames.
struct FeatureCache {
    json meta;
    int tokens = 0;
    int width = 0;
    std::unordered_map<uint64_t, size_t> index;  // (traj<<32)|step -> float offset
    std::vector<float> payload;

    static uint64_t key(int traj, int step) { return (static_cast<uint64_t>(traj) << 32) | static_cast<uint32_t>(step); }

    bool contains(int traj, int step) const { return index.count(key(traj, step)) != 0; }
    const float* get(int traj, int step) const;
};

// Features for every (traj, step) with step % stride == 0, plus step 0.
// The clip at step s is (frame_{max(s-1,0)}, frame_s).
void build_feature_cache(const sim::Dataset& ds, const EncoderCheckpoint& ck, const std::string& path, int stride = 1);

FeatureCache load_feature_cache(const std::string& path);

}  // namespace vlalab::enc
