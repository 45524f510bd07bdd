#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vlalab/core/rng.hpp"

namespace vlalab::sim {

using core::Rng;
using json = nlohmann::json;

struct Vec2 {
    float x = 0, y = 0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(Vec2 a, float s) { return {a.x * s, a.y * s}; }
inline float norm(Vec2 a) { return std::sqrt(a.x * a.x + a.y * a.y); }

enum ObjectShape : int { kDisc = 0, kSquare = 1, kTriangle = 2 };

struct ObjectState {
    int id = 0;
    Vec2 pos;
    int color = 0;  // index into the fixed object palette
    int shape = kDisc;
};

// Task-relevant partition of the simulator state.
struct WorldState {
    Vec2 gripper;
    std::optional<int> holding;
    std::vector<ObjectState> objects;
    int target_object = 0;
    Vec2 goal_center;
    float goal_radius = 0.12f;
    int step_index = 0;

    const ObjectState& target() const { return objects[static_cast<size_t>(target_object)]; }
};

struct Background {
    int pattern = 0;  // 0 checker, 1 stripes, 2 sinusoid
    float phase = 0.f;
    std::array<float, 3> c0{0.20f, 0.22f, 0.25f};
    std::array<float, 3> c1{0.30f, 0.33f, 0.38f};
};

// Task-irrelevant factors; sampled at reset and constant within a trajectory.
struct NuisanceState {
    float brightness = 1.f;
    std::array<float, 3> tint{0.f, 0.f, 0.f};
    Background bg;
    float cam_dx = 0.f, cam_dy = 0.f;  // pixels
    float noise_sigma = 0.f;
};

struct Action {
    Vec2 delta;        // clamped to [-0.1, 0.1] per axis
    float grip = -1.f;  // >= 0 closes, < 0 opens
};

struct Range {
    float lo = 0.f, hi = 0.f;
    float sample(Rng& rng) const { return lo >= hi ? lo : static_cast<float>(rng.uniform(lo, hi)); }
};

struct SceneConfig {
    int object_count = 3;
    int resolution = 32;
    int horizon = 80;
    float grasp_radius = 0.04f;
    float min_spacing = 0.12f;
    float goal_radius = 0.12f;
    float max_step = 0.1f;

    bool light_enabled = false;
    Range brightness{1.f, 1.f};
    float tint_max = 0.f;

    bool background_enabled = false;
    std::vector<int> bg_patterns{0, 1, 2};
    int bg_palette_set = 0;     // 0 train palettes, 1 held-out
    int bg_fixed_palette = -1;  // -1 samples from the set

    bool camera_enabled = false;
    Range cam_dx{0.f, 0.f};
    Range cam_dy{0.f, 0.f};

    bool noise_enabled = false;
    Range noise_sigma{0.f, 0.f};

    std::vector<int> instruction_templates{0};
    uint64_t placement_salt = 0;
};

void to_json(json& j, const SceneConfig& c);
void from_json(const json& j, SceneConfig& c);

// Object color table (color id -> rgb).
const std::array<std::array<float, 3>, 6>& object_palette();
// Background palette sets: [set][palette] -> pair of colors.
const std::vector<std::vector<Background>>& background_palettes();

struct ResetResult {
    WorldState world;
    NuisanceState nuisance;
    std::vector<int> instruction;
    int region_id = 0;
};

// Places objects by rejection sampling (pairwise spacing >= min_spacing, target
// spawned outside the goal region) and samples nuisance factors from the
// config ranges. Deterministic in (config, seed).
ResetResult reset(const SceneConfig& config, uint64_t seed);

struct StepResult {
    bool done = false;
    bool success = false;
};

// Deterministic transition; sees only the task-relevant state.
StepResult step(WorldState& world, const Action& action, const SceneConfig& config);

// Four-phase scripted controller: approach, close, transport, release.
Action expert_action(const WorldState& world, const SceneConfig& config);

// Environment wrapper used by rollouts; owns per-step noise seeding.
struct Env {
    SceneConfig config;
    uint64_t traj_seed = 0;
    WorldState world;
    NuisanceState nuisance;
    std::vector<int> instruction;
    bool done = false;
    bool success = false;

    explicit Env(SceneConfig cfg) : config(std::move(cfg)) {}

    void reset_env(uint64_t seed) {
        traj_seed = seed;
        ResetResult r = sim::reset(config, seed);
        world = std::move(r.world);
        nuisance = r.nuisance;
        instruction = std::move(r.instruction);
        done = false;
        success = false;
    }

    StepResult step_env(const Action& a) {
        StepResult r = sim::step(world, a, config);
        done = r.done;
        success = r.success;
        return r;
    }

    std::vector<float> observe() const;
};

}  // namespace vlalab::sim
