#pragma once

#include <string>
#include <vector>

#include "vlalab/enc/pretrain.hpp"
#include "vlalab/policy/model.hpp"
#include "vlalab/probe/probe.hpp"

namespace vlalab::cli {

using json = nlohmann::json;

// Experiment configuration with sections {sim, encoder, probe, policy, eval}.
// Every field has a default; unknown keys are rejected; parse -> serialize is
// lossless; the content hash is recorded in all outputs.
struct ExperimentConfig {
    sim::SceneConfig scene;
    int sim_n_traj = 50;

    enc::ViTConfig vit;
    enc::PretrainConfig pretrain;

    probe::ProbeConfig probe_cfg;
    std::vector<uint64_t> probe_seeds = {0, 1, 2};

    policy::PolicyConfig policy_cfg;

    int eval_episodes = 100;
    std::vector<std::string> eval_dims = {"camera", "light", "background", "noise", "layout", "language"};

    json to_json() const;
    static ExperimentConfig parse(const json& j);
    static ExperimentConfig load(const std::string& path);  // missing file -> error naming the path

    // desk: the defaults; paper: Table-scale probe head and sparse gated interval
    void apply_preset(const std::string& name);

    std::string hash() const;
};

}  // namespace vlalab::cli
