#include "vlalab/sim/world.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vlalab/sim/instruction.hpp"
#include "vlalab/sim/render.hpp"

namespace vlalab::sim {

namespace {

float clampf(float v, float lo, float hi) { return std::min(std::max(v, lo), hi); }

Vec2 clamp_step(Vec2 d, float max_step) {
    return {clampf(d.x, -max_step, max_step), clampf(d.y, -max_step, max_step)};
}

}  // namespace

const std::array<std::array<float, 3>, 6>& object_palette() {
    static const std::array<std::array<float, 3>, 6> p = {{
        {1.00f, 0.15f, 0.15f},  // red
        {0.15f, 0.95f, 0.15f},  // green
        {0.25f, 0.40f, 1.00f},  // blue
        {1.00f, 0.95f, 0.20f},  // yellow
        {1.00f, 0.25f, 1.00f},  // magenta
        {0.20f, 0.95f, 0.95f},  // cyan
    }};
    return p;
}

const std::vector<std::vector<Background>>& background_palettes() {
    static const std::vector<std::vector<Background>> sets = {
        // set 0: training palettes
        {
            {0, 0.f, {0.20f, 0.22f, 0.25f}, {0.30f, 0.33f, 0.38f}},
            {0, 0.f, {0.18f, 0.25f, 0.18f}, {0.28f, 0.38f, 0.26f}},
            {0, 0.f, {0.30f, 0.24f, 0.18f}, {0.42f, 0.34f, 0.24f}},
            {0, 0.f, {0.16f, 0.18f, 0.30f}, {0.24f, 0.28f, 0.44f}},
        },
        // set 1: held-out palettes for evaluation suites
        {
            {0, 0.f, {0.50f, 0.20f, 0.20f}, {0.55f, 0.30f, 0.22f}},
            {0, 0.f, {0.20f, 0.45f, 0.45f}, {0.30f, 0.55f, 0.50f}},
            {0, 0.f, {0.45f, 0.45f, 0.20f}, {0.50f, 0.55f, 0.30f}},
            {0, 0.f, {0.35f, 0.20f, 0.45f}, {0.45f, 0.30f, 0.55f}},
        },
    };
    return sets;
}

void to_json(json& j, const SceneConfig& c) {
    j = json{{"object_count", c.object_count},
             {"resolution", c.resolution},
             {"horizon", c.horizon},
             {"grasp_radius", c.grasp_radius},
             {"min_spacing", c.min_spacing},
             {"goal_radius", c.goal_radius},
             {"max_step", c.max_step},
             {"light_enabled", c.light_enabled},
             {"brightness", {c.brightness.lo, c.brightness.hi}},
             {"tint_max", c.tint_max},
             {"background_enabled", c.background_enabled},
             {"bg_patterns", c.bg_patterns},
             {"bg_palette_set", c.bg_palette_set},
             {"bg_fixed_palette", c.bg_fixed_palette},
             {"camera_enabled", c.camera_enabled},
             {"cam_dx", {c.cam_dx.lo, c.cam_dx.hi}},
             {"cam_dy", {c.cam_dy.lo, c.cam_dy.hi}},
             {"noise_enabled", c.noise_enabled},
             {"noise_sigma", {c.noise_sigma.lo, c.noise_sigma.hi}},
             {"instruction_templates", c.instruction_templates},
             {"placement_salt", c.placement_salt}};
}

void from_json(const json& j, SceneConfig& c) {
    c.object_count = j.at("object_count");
    c.resolution = j.at("resolution");
    c.horizon = j.at("horizon");
    c.grasp_radius = j.at("grasp_radius");
    c.min_spacing = j.at("min_spacing");
    c.goal_radius = j.at("goal_radius");
    c.max_step = j.at("max_step");
    c.light_enabled = j.at("light_enabled");
    c.brightness = {j.at("brightness")[0], j.at("brightness")[1]};
    c.tint_max = j.at("tint_max");
    c.background_enabled = j.at("background_enabled");
    c.bg_patterns = j.at("bg_patterns").get<std::vector<int>>();
    c.bg_palette_set = j.at("bg_palette_set");
    c.bg_fixed_palette = j.at("bg_fixed_palette");
    c.camera_enabled = j.at("camera_enabled");
    c.cam_dx = {j.at("cam_dx")[0], j.at("cam_dx")[1]};
    c.cam_dy = {j.at("cam_dy")[0], j.at("cam_dy")[1]};
    c.noise_enabled = j.at("noise_enabled");
    c.noise_sigma = {j.at("noise_sigma")[0], j.at("noise_sigma")[1]};
    c.instruction_templates = j.at("instruction_templates").get<std::vector<int>>();
    c.placement_salt = j.at("placement_salt");
}

ResetResult reset(const SceneConfig& config, uint64_t seed) {
    if (config.object_count < 2 || config.object_count > 5)
        throw std::invalid_argument("reset: object_count must be in [2,5], got " + std::to_string(config.object_count));
    if (config.goal_radius <= 0.f || config.goal_radius > 0.3f)
        throw std::invalid_argument("reset: goal_radius must be in (0, 0.3]");

    Rng rng(core::mix_seed(seed, config.placement_salt, 0x5ce00ull));

    ResetResult out;
    WorldState& w = out.world;
    int k = config.object_count;

    out.region_id = static_cast<int>(rng.randint(0, kNumRegions));
    auto [gx, gy] = region_anchor(out.region_id);
    w.goal_center = {gx, gy};
    w.goal_radius = config.goal_radius;
    w.target_object = static_cast<int>(rng.randint(0, k));

    const float margin = 0.12f;
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
        std::vector<Vec2> pos;
        bool ok = true;
        for (int i = 0; i < k && ok; ++i) {
            Vec2 p{static_cast<float>(rng.uniform(margin, 1.f - margin)),
                   static_cast<float>(rng.uniform(margin, 1.f - margin))};
            for (const Vec2& q : pos)
                if (norm(p - q) < config.min_spacing) {
                    ok = false;
                    break;
                }
            // target must start outside the goal region so success needs transport
            if (ok && i == w.target_object && norm(p - w.goal_center) <= config.goal_radius + 0.05f) ok = false;
            if (ok) pos.push_back(p);
        }
        if (!ok) continue;
        placed = true;
        // distinct colors so the instruction identifies exactly one object
        std::vector<int> colors = {0, 1, 2, 3, 4, 5};
        rng.shuffle(colors);
        w.objects.clear();
        for (int i = 0; i < k; ++i) {
            ObjectState o;
            o.id = i;
            o.pos = pos[static_cast<size_t>(i)];
            o.color = colors[static_cast<size_t>(i)];
            o.shape = static_cast<int>(rng.randint(0, 3));
            w.objects.push_back(o);
        }
    }
    if (!placed) throw std::runtime_error("reset: infeasible placement after 1000 rejection samples");

    w.gripper = {static_cast<float>(rng.uniform(margin, 1.f - margin)),
                 static_cast<float>(rng.uniform(margin, 1.f - margin))};
    w.holding.reset();
    w.step_index = 0;

    NuisanceState& nu = out.nuisance;
    if (config.light_enabled) {
        nu.brightness = config.brightness.sample(rng);
        for (auto& t : nu.tint) t = static_cast<float>(rng.uniform(-config.tint_max, config.tint_max));
    }
    if (config.background_enabled) {
        const auto& palettes = background_palettes().at(static_cast<size_t>(config.bg_palette_set));
        size_t pal = config.bg_fixed_palette >= 0
                         ? static_cast<size_t>(config.bg_fixed_palette)
                         : static_cast<size_t>(rng.randint(0, static_cast<int64_t>(palettes.size())));
        nu.bg = palettes.at(pal);
        nu.bg.pattern = config.bg_patterns[static_cast<size_t>(rng.randint(0, static_cast<int64_t>(config.bg_patterns.size())))];
        nu.bg.phase = static_cast<float>(rng.uniform(0.0, 1.0));
    }
    if (config.camera_enabled) {
        nu.cam_dx = config.cam_dx.sample(rng);
        nu.cam_dy = config.cam_dy.sample(rng);
    }
    if (config.noise_enabled) nu.noise_sigma = config.noise_sigma.sample(rng);

    const ObjectState& tgt = w.objects[static_cast<size_t>(w.target_object)];
    int template_id =
        config.instruction_templates[static_cast<size_t>(rng.randint(0, static_cast<int64_t>(config.instruction_templates.size())))];
    out.instruction = encode_instruction(template_id, {tgt.color, tgt.shape, out.region_id});
    return out;
}

StepResult step(WorldState& world, const Action& action, const SceneConfig& config) {
    Vec2 delta = clamp_step(action.delta, config.max_step);
    float grip = clampf(action.grip, -1.f, 1.f);

    world.gripper.x = clampf(world.gripper.x + delta.x, 0.f, 1.f);
    world.gripper.y = clampf(world.gripper.y + delta.y, 0.f, 1.f);

    if (world.holding) world.objects[static_cast<size_t>(*world.holding)].pos = world.gripper;

    if (grip >= 0.f && !world.holding) {
        int nearest = -1;
        float best = config.grasp_radius;
        for (const auto& o : world.objects) {
            float d = norm(o.pos - world.gripper);
            if (d <= best) {
                best = d;
                nearest = o.id;
            }
        }
        if (nearest >= 0) {
            world.holding = nearest;
            world.objects[static_cast<size_t>(nearest)].pos = world.gripper;
        }
    } else if (grip < 0.f && world.holding) {
        world.holding.reset();
    }

    world.step_index += 1;

    StepResult r;
    const ObjectState& tgt = world.objects[static_cast<size_t>(world.target_object)];
    bool released = !world.holding.has_value();
    r.success = released && norm(tgt.pos - world.goal_center) <= world.goal_radius;
    r.done = r.success || world.step_index >= config.horizon;
    return r;
}

Action expert_action(const WorldState& world, const SceneConfig& config) {
    Action a;
    const ObjectState& tgt = world.objects[static_cast<size_t>(world.target_object)];
    if (!world.holding) {
        Vec2 d = tgt.pos - world.gripper;
        if (norm(d) > config.grasp_radius * 0.5f) {
            a.delta = clamp_step(d, config.max_step);
            a.grip = -1.f;
        } else {
            a.delta = d;  // center on the target and close
            a.grip = 1.f;
        }
        return a;
    }
    if (*world.holding != world.target_object) {
        a.delta = {0.f, 0.f};  // drop a mistaken grasp
        a.grip = -1.f;
        return a;
    }
    Vec2 d = world.goal_center - world.gripper;
    if (norm(d) > world.goal_radius * 0.5f) {
        a.delta = clamp_step(d, config.max_step);
        a.grip = 1.f;
    } else {
        a.delta = d;
        a.grip = -1.f;  // release inside the goal
    }
    return a;
}

std::vector<float> Env::observe() const {
    return render(world, nuisance, config.resolution, frame_noise_seed(traj_seed, world.step_index));
}

}  // namespace vlalab::sim
