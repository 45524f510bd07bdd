#pragma once

#include <cstdint>
#include <vector>

#include "vlalab/sim/world.hpp"

namespace vlalab::sim {

// Frames are row-major H x W x 3 floats in [0,1].
// Draw order: background pattern, objects (filled shapes), gripper cross;
// then clamp(brightness * o + tint); Gaussian pixel noise last, seeded per
// step. The camera offset shifts the sampled crop in pixel units.
std::vector<float> render(const WorldState& world, const NuisanceState& nuisance, int resolution, uint64_t noise_seed);

// Background texture only (no objects, no gripper, no noise); photometric
// nuisance still applied. Serves as the target for background probes.
std::vector<float> render_background(const NuisanceState& nuisance, int resolution);

// Per-pixel source labels before photometric/noise stages:
// 0 = background, 1+id = object id, 255 = gripper marker.
std::vector<uint8_t> render_segmentation(const WorldState& world, const NuisanceState& nuisance, int resolution);

// Per-step noise stream id for a trajectory frame.
inline uint64_t frame_noise_seed(uint64_t traj_seed, int step_index) {
    return core::mix_seed(traj_seed, 0x9d5eu, static_cast<uint64_t>(step_index));
}

}  // namespace vlalab::sim
