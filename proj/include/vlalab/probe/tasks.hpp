#pragma once

#include "vlalab/enc/feature_cache.hpp"
#include "vlalab/probe/probe.hpp"

namespace vlalab::probe {

using enc::EncoderCheckpoint;
using enc::FeatureCache;

// Probe datasets for the four analysis tasks. The cache must have been built
// on the same dataset with a stride dividing config.step_stride.

// Targets: z-scored [gripper x,y; each object x,y] from per-step states.
ProbeData task_relevant_data(const sim::Dataset& ds, const FeatureCache& fc, const ProbeConfig& config);

// First-frame features -> [brightness, tint r,g,b]; dataset must carry light
// perturbations.
ProbeData nuisance_light_data(const sim::Dataset& ds, const FeatureCache& fc);

// First-frame features -> background-only render; dataset must carry
// background perturbations. Trained with MAE through a single linear map.
ProbeData nuisance_background_data(const sim::Dataset& ds, const FeatureCache& fc);

// Features at t -> s_rel(t+10) - s_rel(t), unnormalized; steps within 10 of
// termination clamp to the final state (flag recorded per sample count).
ProbeData residual_data(const sim::Dataset& ds, const FeatureCache& fc, const ProbeConfig& config, int horizon_gap = 10);

// Raw-pixel identity features (patchified first frame); the lower-bound
// oracle for background reconstruction.
ProbeData pixel_background_data(const sim::Dataset& ds, int patch = 8);

struct TaskRun {
    std::string task;
    std::string encoder;
    uint64_t seed = 0;
    double loss = 0;
    FitResult fit;
};

double task_relevant_regression(const sim::Dataset& ds, const FeatureCache& fc, const ProbeConfig& config, uint64_t seed);
double nuisance_light_regression(const sim::Dataset& ds, const FeatureCache& fc, const ProbeConfig& config, uint64_t seed);
double nuisance_background_regression(const sim::Dataset& ds, const FeatureCache& fc, const ProbeConfig& config,
                                      uint64_t seed);
double residual_prediction(const sim::Dataset& ds, const FeatureCache& fc, const ProbeConfig& config, uint64_t seed);

struct ProbeEntry {
    std::string task;
    std::string encoder;
    std::vector<double> losses;  // one per seed
    double mean = 0;
    double stddev = 0;
    double relative = 0;  // mean / worst encoder mean on this task
};

struct ProbeReport {
    std::vector<ProbeEntry> entries;
    json meta;
};

extern const std::vector<std::string> kProbeTasks;  // task_relevant, residual, light, background

// Runs all four tasks per encoder per seed; relative loss normalizes by the
// worst encoder mean per task. Requires >= 3 seeds.
ProbeReport compare_encoders(const std::vector<std::pair<std::string, const EncoderCheckpoint*>>& encoders,
                             const sim::Dataset& ds, const ProbeConfig& config, const std::vector<uint64_t>& seeds,
                             const std::string& cache_dir);

// report.jsonl (one record per entry) plus plot-ready report.csv
// (task, encoder, seed, loss, relative_loss).
void write_probe_report(const ProbeReport& report, const std::string& dir);

}  // namespace vlalab::probe
