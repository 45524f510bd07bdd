#include "vlalab/probe/tasks.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "vlalab/core/serialize.hpp"
#include "vlalab/enc/vit.hpp"

namespace vlalab::probe {

using namespace core;

namespace {

std::vector<float> copy_features(const FeatureCache& fc, int traj, int step) {
    const float* p = fc.get(traj, step);
    return std::vector<float>(p, p + static_cast<size_t>(fc.tokens) * fc.width);
}

}  // namespace

ProbeData task_relevant_data(const sim::Dataset& ds, const FeatureCache& fc, const ProbeConfig& config) {
    ProbeData out;
    out.tokens = fc.tokens;
    out.width = fc.width;
    for (size_t t = 0; t < ds.trajectories.size(); ++t) {
        const auto& traj = ds.trajectories[t];
        for (size_t s = 0; s < traj.steps.size(); s += static_cast<size_t>(config.step_stride)) {
            out.features.push_back(copy_features(fc, static_cast<int>(t), static_cast<int>(s)));
            out.targets.push_back(sim::task_relevant_vector(traj.steps[s].state));
            out.traj_ids.push_back(static_cast<int>(t));
        }
    }
    return out;
}

ProbeData nuisance_light_data(const sim::Dataset& ds, const FeatureCache& fc) {
    if (!ds.config.light_enabled)
        throw std::invalid_argument("nuisance_light_data: dataset was generated without light perturbations");
    ProbeData out;
    out.tokens = fc.tokens;
    out.width = fc.width;
    for (size_t t = 0; t < ds.trajectories.size(); ++t) {
        const auto& nu = ds.trajectories[t].nuisance;
        out.features.push_back(copy_features(fc, static_cast<int>(t), 0));  // perturbations are constant per trajectory
        out.targets.push_back({nu.brightness, nu.tint[0], nu.tint[1], nu.tint[2]});
        out.traj_ids.push_back(static_cast<int>(t));
    }
    return out;
}

ProbeData nuisance_background_data(const sim::Dataset& ds, const FeatureCache& fc) {
    if (!ds.config.background_enabled)
        throw std::invalid_argument("nuisance_background_data: dataset was generated without background perturbations");
    ProbeData out;
    out.tokens = fc.tokens;
    out.width = fc.width;
    for (size_t t = 0; t < ds.trajectories.size(); ++t) {
        out.features.push_back(copy_features(fc, static_cast<int>(t), 0));
        out.targets.push_back(sim::render_background(ds.trajectories[t].nuisance, ds.config.resolution));
        out.traj_ids.push_back(static_cast<int>(t));
    }
    return out;
}

ProbeData residual_data(const sim::Dataset& ds, const FeatureCache& fc, const ProbeConfig& config, int horizon_gap) {
    size_t longest = 0;
    for (const auto& traj : ds.trajectories) longest = std::max(longest, traj.steps.size());
    if (longest <= static_cast<size_t>(horizon_gap))
        throw std::invalid_argument("residual_data: no trajectory longer than the " + std::to_string(horizon_gap) +
                                    "-step horizon");
    ProbeData out;
    out.tokens = fc.tokens;
    out.width = fc.width;
    int clamped = 0, total = 0;
    for (size_t t = 0; t < ds.trajectories.size(); ++t) {
        const auto& traj = ds.trajectories[t];
        for (size_t s = 0; s < traj.steps.size(); s += static_cast<size_t>(config.step_stride)) {
            std::vector<float> now = sim::task_relevant_vector(traj.steps[s].state);
            size_t later = s + static_cast<size_t>(horizon_gap);
            std::vector<float> future;
            if (later < traj.steps.size()) {
                future = sim::task_relevant_vector(traj.steps[later].state);
            } else {
                future = sim::task_relevant_vector(traj.final_state);  // clamped horizon
                ++clamped;
            }
            for (size_t j = 0; j < now.size(); ++j) future[j] -= now[j];
            out.features.push_back(copy_features(fc, static_cast<int>(t), static_cast<int>(s)));
            out.targets.push_back(std::move(future));
            out.traj_ids.push_back(static_cast<int>(t));
            ++total;
        }
    }
    (void)total;
    (void)clamped;
    return out;
}

ProbeData pixel_background_data(const sim::Dataset& ds, int patch) {
    if (!ds.config.background_enabled)
        throw std::invalid_argument("pixel_background_data: dataset was generated without background perturbations");
    int res = ds.config.resolution;
    ProbeData out;
    int grid = res / patch;
    out.tokens = grid * grid;
    out.width = patch * patch * 3;
    for (size_t t = 0; t < ds.trajectories.size(); ++t) {
        enc::PatchTokens pt = enc::patchify(ds.trajectories[t].steps[0].frame, 1, res, res, patch, 1);
        out.features.push_back(std::move(pt.tokens));
        out.targets.push_back(sim::render_background(ds.trajectories[t].nuisance, res));
        out.traj_ids.push_back(static_cast<int>(t));
    }
    return out;
}

double task_relevant_regression(const sim::Dataset& ds, const FeatureCache& fc, const ProbeConfig& config,
                                uint64_t seed) {
    return fit_probe(task_relevant_data(ds, fc, config), config, seed, /*normalize=*/true, /*mae=*/false).test_loss;
}

double nuisance_light_regression(const sim::Dataset& ds, const FeatureCache& fc, const ProbeConfig& config,
                                 uint64_t seed) {
    return fit_probe(nuisance_light_data(ds, fc), config, seed, true, false).test_loss;
}

double nuisance_background_regression(const sim::Dataset& ds, const FeatureCache& fc, const ProbeConfig& config,
                                      uint64_t seed) {
    return fit_probe(nuisance_background_data(ds, fc), config, seed, /*normalize=*/false, /*mae=*/true).test_loss;
}

double residual_prediction(const sim::Dataset& ds, const FeatureCache& fc, const ProbeConfig& config, uint64_t seed) {
    return fit_probe(residual_data(ds, fc, config), config, seed, /*normalize=*/false, false).test_loss;
}

const std::vector<std::string> kProbeTasks = {"task_relevant", "residual", "light", "background"};

ProbeReport compare_encoders(const std::vector<std::pair<std::string, const EncoderCheckpoint*>>& encoders,
                             const sim::Dataset& ds, const ProbeConfig& config, const std::vector<uint64_t>& seeds,
                             const std::string& cache_dir) {
    if (seeds.size() < 3)
        throw std::invalid_argument("compare_encoders: need >= 3 seeds, got " + std::to_string(seeds.size()));
    namespace fs = std::filesystem;
    fs::create_directories(cache_dir);

    ProbeReport report;
    report.meta["dataset"] = ds.id();
    report.meta["seeds"] = seeds;
    report.meta["tasks"] = kProbeTasks;
    {
        json cfg;
        cfg["depth"] = config.depth;
        cfg["width"] = config.width;
        cfg["heads"] = config.heads;
        cfg["ff_dim"] = config.ff_dim;
        cfg["lr"] = config.lr;
        cfg["batch"] = config.batch;
        cfg["max_epochs"] = config.max_epochs;
        cfg["patience"] = config.patience;
        cfg["step_stride"] = config.step_stride;
        report.meta["probe_config"] = cfg;
        report.meta["config_hash"] = hash_hex(cfg.dump());
    }

    for (const auto& [name, ck] : encoders) {
        std::string cache_path = cache_dir + "/" + name + "_" + ds.id() + ".feat";
        if (!fs::exists(cache_path)) enc::build_feature_cache(ds, *ck, cache_path, config.step_stride);
        FeatureCache fc = enc::load_feature_cache(cache_path);

        for (const std::string& task : kProbeTasks) {
            ProbeEntry entry;
            entry.task = task;
            entry.encoder = name;
            for (uint64_t seed : seeds) {
                double loss;
                if (task == "task_relevant")
                    loss = task_relevant_regression(ds, fc, config, seed);
                else if (task == "residual")
                    loss = residual_prediction(ds, fc, config, seed);
                else if (task == "light")
                    loss = nuisance_light_regression(ds, fc, config, seed);
                else
                    loss = nuisance_background_regression(ds, fc, config, seed);
                entry.losses.push_back(loss);
            }
            double m = 0;
            for (double l : entry.losses) m += l;
            m /= static_cast<double>(entry.losses.size());
            double v = 0;
            for (double l : entry.losses) v += (l - m) * (l - m);
            entry.mean = m;
            entry.stddev = std::sqrt(v / static_cast<double>(entry.losses.size()));
            report.entries.push_back(std::move(entry));
        }
    }

    // relative loss: per-task normalization by the worst encoder mean
    for (const std::string& task : kProbeTasks) {
        double worst = 0;
        for (const auto& e : report.entries)
            if (e.task == task) worst = std::max(worst, e.mean);
        for (auto& e : report.entries)
            if (e.task == task) e.relative = worst > 0 ? e.mean / worst : 1.0;
    }
    return report;
}

void write_probe_report(const ProbeReport& report, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::ofstream jl(dir + "/report.jsonl");
    if (!jl) throw std::runtime_error("write_probe_report: cannot open '" + dir + "/report.jsonl'");
    for (const auto& e : report.entries) {
        json j;
        j["task"] = e.task;
        j["encoder"] = e.encoder;
        j["losses"] = e.losses;
        j["mean"] = e.mean;
        j["stddev"] = e.stddev;
        j["relative"] = e.relative;
        jl << j.dump() << "\n";
    }
    json meta_line;
    meta_line["meta"] = report.meta;
    jl << meta_line.dump() << "\n";

    std::ofstream csv(dir + "/report.csv");
    if (!csv) throw std::runtime_error("write_probe_report: cannot open '" + dir + "/report.csv'");
    csv << "task,encoder,seed,loss,relative_loss\n";
    const auto& seeds = report.meta.at("seeds");
    for (const auto& e : report.entries)
        for (size_t i = 0; i < e.losses.size(); ++i)
            csv << e.task << "," << e.encoder << "," << seeds[i].get<uint64_t>() << "," << e.losses[i] << "," << e.relative
                << "\n";
}

}  // namespace vlalab::probe
