#pragma once

#include <memory>

#include "vlalab/policy/model.hpp"
#include "vlalab/sim/perturb.hpp"

namespace vlalab::policy {

// Produces one action chunk per call; the executor decodes the whole chunk in
// a single forward pass (parallel decoding) and replans at chunk boundaries.
struct Planner {
    virtual ~Planner() = default;
    virtual std::vector<sim::Action> plan(const sim::Env& env, const std::vector<float>& frame_prev,
                                          const std::vector<float>& frame_cur) = 0;
};

struct LearnedPlanner : Planner {
    const PolicyCheckpoint& ck;
    const enc::EncoderCheckpoint* encoder;  // required iff fused

    LearnedPlanner(const PolicyCheckpoint& ck, const enc::EncoderCheckpoint* encoder);
    std::vector<sim::Action> plan(const sim::Env& env, const std::vector<float>& frame_prev,
                                  const std::vector<float>& frame_cur) override;
};

// Oracle: replays the scripted expert on a copy of the true state.
struct ExpertPlanner : Planner {
    int chunk;
    explicit ExpertPlanner(int chunk) : chunk(chunk) {}
    std::vector<sim::Action> plan(const sim::Env& env, const std::vector<float>&, const std::vector<float>&) override;
};

struct RandomPlanner : Planner {
    int chunk;
    uint64_t salt;
    explicit RandomPlanner(int chunk, uint64_t salt = 0) : chunk(chunk), salt(salt) {}
    std::vector<sim::Action> plan(const sim::Env& env, const std::vector<float>&, const std::vector<float>&) override;
};

struct EvalRow {
    std::string dimension;
    std::string label;
    std::string variant;
    double success_rate = 0;
    int episodes = 0;
    uint64_t seed = 0;
};

struct LabeledConfig {
    std::string dimension;
    std::string label;
    sim::SceneConfig config;
};

// Per chunk: one forward pass decodes all actions; the first m (default all)
// execute with x2 linear interpolation between consecutive actions (deltas
// halved over two env steps, grips interpolated). Episode seeds derive from
// (seed, config index, episode).
std::vector<EvalRow> rollout_eval(Planner& planner, const std::vector<LabeledConfig>& configs, int n_episodes,
                                  uint64_t seed, const std::string& variant, int execute_m = -1);

// config dimension, config label, variant, success rate, episodes, seed
void write_eval_csv(const std::string& path, const std::vector<EvalRow>& rows);
std::vector<EvalRow> read_eval_csv(const std::string& path);

}  // namespace vlalab::policy
