#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "vlalab/core/nn.hpp"

namespace vlalab::probe {

using json = nlohmann::json;

struct ProbeConfig {
    int depth = 2;
    int width = 128;
    int heads = 4;
    int ff_dim = 256;
    double dropout = 0.1;
    double lr = 1e-4;
    double weight_decay = 1e-5;
    int batch = 32;
    int max_epochs = 100;
    int patience = 10;
    double split_train = 0.8, split_val = 0.1, split_test = 0.1;
    int step_stride = 6;  // trajectory steps sampled into probe datasets

    static ProbeConfig desk() { return ProbeConfig{}; }

    // Table-6-scale head; heavy relative to toy features but available
    static ProbeConfig paper() {
        ProbeConfig c;
        c.depth = 12;
        c.width = 768;
        c.heads = 16;
        c.ff_dim = 3072;
        return c;
    }
};

// Flat probe dataset: features[i] is a tokens x width matrix, targets[i] a
// fixed-width vector, traj_ids[i] the owning trajectory (splits never cut
// through a trajectory).
struct ProbeData {
    int tokens = 0;
    int width = 0;
    std::vector<std::vector<float>> features;
    std::vector<std::vector<float>> targets;
    std::vector<int> traj_ids;

    int target_dim() const { return targets.empty() ? 0 : static_cast<int>(targets[0].size()); }
    size_t size() const { return features.size(); }
};

struct FitResult {
    double test_loss = 0;
    double best_val_loss = 0;
    int best_epoch = -1;
    int epochs_run = 0;
    json details;  // splits, val curve, z-stats
};

// Trains the CLS-token probe head under the fixed protocol: trajectory-level
// 8:1:1 split, early stopping on validation loss with the configured
// patience, best-validation weights evaluated on test. When
// normalize_targets is set, z-stats come from the train split only.
// Rejects data covering fewer than 10 trajectories.
FitResult fit_probe(const ProbeData& data, const ProbeConfig& config, uint64_t seed, bool normalize_targets,
                    bool use_mae);

}  // namespace vlalab::probe
