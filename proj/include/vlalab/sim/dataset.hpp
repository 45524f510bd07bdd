#pragma once

#include <string>
#include <vector>

#include "vlalab/sim/render.hpp"
#include "vlalab/sim/world.hpp"

namespace vlalab::sim {

struct StepRecord {
    WorldState state;  // pre-action state; frame == render(state) for the stored seed
    Action action;
    std::vector<float> frame;
};

struct Trajectory {
    uint64_t traj_seed = 0;
    std::vector<int> instruction;
    NuisanceState nuisance;
    std::vector<StepRecord> steps;
    WorldState final_state;  // post-terminal state, used to clamp residual targets
    bool success = false;
};

struct Dataset {
    SceneConfig config;
    uint64_t seed = 0;
    std::vector<Trajectory> trajectories;

    // stable id derived from (config, seed); keys feature caches
    std::string id() const;
};

// Fixed-width float encoding of WorldState: [gx, gy, holding, target,
// goal_cx, goal_cy, goal_r, step_index, then per object x, y, color, shape].
std::vector<float> encode_state(const WorldState& w);
WorldState decode_state(const std::vector<float>& v, int object_count);
int state_dim(int object_count);

// Task-relevant probe target: [gripper x, y; each object x, y].
std::vector<float> task_relevant_vector(const WorldState& w);

// Expert rollouts persisted with states, frames, actions and instructions.
// Rejects n_traj < 1.
Dataset collect_dataset(int n_traj, const SceneConfig& config, uint64_t seed);

void save_dataset(const std::string& path, const Dataset& ds);
Dataset load_dataset(const std::string& path);

}  // namespace vlalab::sim
