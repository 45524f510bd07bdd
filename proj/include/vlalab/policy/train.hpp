#pragma once

#include "vlalab/policy/model.hpp"
#include "vlalab/sim/dataset.hpp"

namespace vlalab::policy {

// Behavior cloning over expert trajectories. The encoder is required (and
// stays frozen) whenever cfg.fusion != none; the loss covers action slots
// only: cross-entropy over 256-way tokens in discrete mode, l1 regression on
// chunks in continuous mode. Optimizer groups: base parameters at base_lr,
// gated-fusion parameters at fusion_lr.
PolicyCheckpoint train_bc(const sim::Dataset& ds, const enc::EncoderCheckpoint* encoder, PolicyConfig cfg,
                          uint64_t seed);

// Chunked action targets for step s: actions s..s+chunk-1, repeating the
// final action past termination.
std::vector<sim::Action> chunk_targets(const sim::Trajectory& traj, size_t step, int chunk);

}  // namespace vlalab::policy
