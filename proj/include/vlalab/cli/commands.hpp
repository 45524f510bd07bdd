#pragma once

#include "vlalab/cli/config.hpp"
#include "vlalab/policy/rollout.hpp"

namespace vlalab::cli {

// Every command is deterministic given (config, seed), writes its artifacts
// under --out, and records them in a RunManifest (manifest.json; the one
// output that carries wall-clock and is excluded from byte-identity checks).
struct RunManifest {
    std::string command;
    std::string config_hash;
    std::vector<uint64_t> seeds;
    std::vector<std::string> artifacts;
    double wall_clock_sec = 0;

    void write(const std::string& dir) const;
};

struct CommandResult {
    std::vector<std::string> artifacts;
    json summary;
};

CommandResult cmd_simgen(const ExperimentConfig& cfg, uint64_t seed, const std::string& out_dir);

CommandResult cmd_pretrain(const std::string& family, const ExperimentConfig& cfg, const std::string& dataset_path,
                           uint64_t seed, const std::string& out_dir);

CommandResult cmd_probe(const std::vector<std::string>& encoder_paths, const std::string& dataset_path,
                        const ExperimentConfig& cfg, const std::string& out_dir);

CommandResult cmd_train_policy(const std::string& dataset_path, const std::string& encoder_path,
                               const ExperimentConfig& cfg, uint64_t seed, const std::string& out_dir);

CommandResult cmd_eval(const std::string& policy_path, const std::string& encoder_path, const ExperimentConfig& cfg,
                       uint64_t seed, const std::string& out_dir, const std::string& variant);

CommandResult cmd_report(const std::string& probe_dir, const std::vector<std::string>& eval_dirs,
                         const std::string& out_dir);

}  // namespace vlalab::cli
