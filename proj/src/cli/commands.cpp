#include "vlalab/cli/commands.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "vlalab/cli/svg.hpp"
#include "vlalab/policy/train.hpp"
#include "vlalab/probe/tasks.hpp"

namespace vlalab::cli {

namespace fs = std::filesystem;

void RunManifest::write(const std::string& dir) const {
    json j;
    j["command"] = command;
    j["config_hash"] = config_hash;
    j["seeds"] = seeds;
    j["artifacts"] = artifacts;
    j["wall_clock_sec"] = wall_clock_sec;
    j["versions"] = json{{"vlalab", "0.1.0"}};
    std::ofstream os(dir + "/manifest.json");
    if (!os) throw std::runtime_error("manifest: cannot open '" + dir + "/manifest.json'");
    os << j.dump(2) << "\n";
}

namespace {

void ensure_dir(const std::string& dir) { fs::create_directories(dir); }

void write_jsonl(const std::string& path, const json& records) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("metrics: cannot open '" + path + "'");
    for (const auto& r : records) os << r.dump() << "\n";
}

}  // namespace

CommandResult cmd_simgen(const ExperimentConfig& cfg, uint64_t seed, const std::string& out_dir) {
    ensure_dir(out_dir);
    sim::Dataset ds = sim::collect_dataset(cfg.sim_n_traj, cfg.scene, seed);
    std::string path = out_dir + "/dataset.bin";
    sim::save_dataset(path, ds);
    CommandResult r;
    r.artifacts = {path};
    int successes = 0;
    for (const auto& t : ds.trajectories) successes += t.success ? 1 : 0;
    r.summary = json{{"dataset_id", ds.id()}, {"n_traj", ds.trajectories.size()}, {"successes", successes}};
    return r;
}

CommandResult cmd_pretrain(const std::string& family, const ExperimentConfig& cfg, const std::string& dataset_path,
                           uint64_t seed, const std::string& out_dir) {
    ensure_dir(out_dir);
    sim::Dataset ds = sim::load_dataset(dataset_path);
    enc::EncoderFamily fam = enc::parse_family(family);
    enc::PretrainResult result;
    switch (fam) {
        case enc::EncoderFamily::VideoPredictive:
            result = enc::pretrain_video_predictive(ds, cfg.vit, cfg.pretrain, seed);
            break;
        case enc::EncoderFamily::AugSelfsup:
            result = enc::pretrain_aug_selfsup(ds, cfg.vit, cfg.pretrain, seed);
            break;
        default:
            result = enc::pretrain_lang_contrastive(ds, cfg.vit, cfg.pretrain, seed);
            break;
    }
    std::string ck_path = out_dir + "/encoder.bin";
    enc::save_encoder(ck_path, result.checkpoint);
    std::string metrics_path = out_dir + "/metrics.jsonl";
    write_jsonl(metrics_path, result.log.at("curve"));

    CommandResult r;
    r.artifacts = {ck_path, metrics_path};
    r.summary = json{{"family", family},
                     {"collapse_flag", result.collapse_flag},
                     {"initial_loss", result.log.at("initial_loss")},
                     {"final_loss", result.log.at("final_loss")},
                     {"encoder_id", result.checkpoint.id()}};
    return r;
}

CommandResult cmd_probe(const std::vector<std::string>& encoder_paths, const std::string& dataset_path,
                        const ExperimentConfig& cfg, const std::string& out_dir) {
    ensure_dir(out_dir);
    sim::Dataset ds = sim::load_dataset(dataset_path);
    std::vector<enc::EncoderCheckpoint> checkpoints;
    checkpoints.reserve(encoder_paths.size());
    for (const auto& p : encoder_paths) checkpoints.push_back(enc::load_encoder(p));
    std::vector<std::pair<std::string, const enc::EncoderCheckpoint*>> encoders;
    for (const auto& ck : checkpoints) encoders.emplace_back(enc::family_name(ck.family), &ck);

    probe::ProbeReport report =
        probe::compare_encoders(encoders, ds, cfg.probe_cfg, cfg.probe_seeds, out_dir + "/feature_cache");
    report.meta["experiment_config_hash"] = cfg.hash();
    probe::write_probe_report(report, out_dir);

    // relative-loss chart, one bar cluster per task
    std::vector<BarSeries> series;
    for (const auto& [name, ck] : encoders) {
        BarSeries s;
        s.name = name;
        for (const auto& task : probe::kProbeTasks)
            for (const auto& e : report.entries)
                if (e.task == task && e.encoder == name) s.values.push_back(e.relative);
        series.push_back(std::move(s));
    }
    std::string svg_path = out_dir + "/relative_loss.svg";
    write_svg_bar_chart(svg_path, "Relative probe loss by task", probe::kProbeTasks, series, "relative loss");

    CommandResult r;
    r.artifacts = {out_dir + "/report.jsonl", out_dir + "/report.csv", svg_path};
    json rel;
    for (const auto& e : report.entries) rel[e.task][e.encoder] = e.relative;
    r.summary = json{{"relative", rel}};
    return r;
}

CommandResult cmd_train_policy(const std::string& dataset_path, const std::string& encoder_path,
                               const ExperimentConfig& cfg, uint64_t seed, const std::string& out_dir) {
    ensure_dir(out_dir);
    sim::Dataset ds = sim::load_dataset(dataset_path);
    policy::PolicyConfig pc = cfg.policy_cfg;
    std::optional<enc::EncoderCheckpoint> encoder;
    if (pc.fusion != policy::FusionMode::None) {
        if (encoder_path.empty())
            throw std::invalid_argument("train-policy: fusion=" + policy::fusion_name(pc.fusion) +
                                        " requires --encoder");
        encoder = enc::load_encoder(encoder_path);
    }
    policy::PolicyCheckpoint ck = policy::train_bc(ds, encoder ? &*encoder : nullptr, pc, seed);
    std::string ck_path = out_dir + "/policy.bin";
    policy::save_policy(ck_path, ck);
    std::string metrics_path = out_dir + "/metrics.jsonl";
    write_jsonl(metrics_path, ck.train_log.at("curve"));

    CommandResult r;
    r.artifacts = {ck_path, metrics_path};
    r.summary = json{{"fusion", policy::fusion_name(pc.fusion)},
                     {"initial_loss", ck.train_log.at("initial_loss")},
                     {"final_loss", ck.train_log.at("final_loss")}};
    return r;
}

CommandResult cmd_eval(const std::string& policy_path, const std::string& encoder_path, const ExperimentConfig& cfg,
                       uint64_t seed, const std::string& out_dir, const std::string& variant) {
    ensure_dir(out_dir);
    policy::PolicyCheckpoint ck = policy::load_policy(policy_path);
    std::optional<enc::EncoderCheckpoint> encoder;
    if (ck.config.fusion != policy::FusionMode::None) {
        if (encoder_path.empty())
            throw std::invalid_argument("eval: the policy was trained with fusion and requires --encoder");
        encoder = enc::load_encoder(encoder_path);
    }

    std::vector<policy::LabeledConfig> configs;
    configs.push_back({"clean", "clean", cfg.scene});
    for (const auto& dim_name : cfg.eval_dims) {
        sim::PerturbDim dim = sim::parse_perturb_dim(dim_name);
        for (const auto& entry : sim::perturbation_suite(cfg.scene, dim))
            configs.push_back({dim_name, entry.label, entry.config});
    }

    policy::LearnedPlanner planner(ck, encoder ? &*encoder : nullptr);
    std::vector<policy::EvalRow> rows =
        policy::rollout_eval(planner, configs, cfg.eval_episodes, seed, variant.empty() ? "policy" : variant);
    std::string csv_path = out_dir + "/success.csv";
    policy::write_eval_csv(csv_path, rows);

    CommandResult r;
    r.artifacts = {csv_path};
    json by_dim;
    std::map<std::string, std::pair<double, int>> agg;
    for (const auto& row : rows) {
        agg[row.dimension].first += row.success_rate;
        agg[row.dimension].second += 1;
    }
    for (const auto& [dim, acc] : agg) by_dim[dim] = acc.first / acc.second;
    r.summary = json{{"variant", variant}, {"success_by_dimension", by_dim}};
    return r;
}

CommandResult cmd_report(const std::string& probe_dir, const std::vector<std::string>& eval_dirs,
                         const std::string& out_dir) {
    ensure_dir(out_dir);
    CommandResult r;
    json summary;

    std::ofstream md(out_dir + "/report.md");
    if (!md) throw std::runtime_error("report: cannot open '" + out_dir + "/report.md'");
    md << "# Experiment report\n\n";
    md << "Totals are unweighted means over perturbation dimensions (clean excluded).\n\n";

    if (!probe_dir.empty()) {
        std::string path = probe_dir + "/report.jsonl";
        std::ifstream is(path);
        if (!is) throw std::runtime_error("report: missing probe report '" + path + "'");
        std::map<std::string, std::map<std::string, std::pair<double, double>>> probe_rows;  // task -> encoder -> (mean, rel)
        std::string line;
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            json j = json::parse(line);
            if (!j.contains("task")) continue;
            probe_rows[j.at("task")][j.at("encoder")] = {j.at("mean"), j.at("relative")};
        }
        md << "## Probe losses (relative to the worst encoder per task)\n\n";
        md << "| task | encoder | mean loss | relative |\n|---|---|---|---|\n";
        for (const auto& [task, encs] : probe_rows)
            for (const auto& [e, v] : encs) md << "| " << task << " | " << e << " | " << v.first << " | " << v.second << " |\n";
        md << "\n";
        summary["probe"] = json::object();
        for (const auto& [task, encs] : probe_rows)
            for (const auto& [e, v] : encs) summary["probe"][task][e] = v.second;
    }

    if (!eval_dirs.empty()) {
        // variant -> dimension -> mean success
        std::map<std::string, std::map<std::string, double>> table;
        std::set<std::string> dims;
        for (const auto& dir : eval_dirs) {
            auto rows = policy::read_eval_csv(dir + "/success.csv");
            std::map<std::string, std::pair<double, int>> agg;
            std::string variant = rows.empty() ? dir : rows[0].variant;
            for (const auto& row : rows) {
                agg[row.dimension].first += row.success_rate;
                agg[row.dimension].second += 1;
            }
            for (const auto& [dim, acc] : agg) {
                table[variant][dim] = acc.first / acc.second;
                dims.insert(dim);
            }
        }
        std::vector<std::string> dim_order;
        if (dims.count("clean")) dim_order.push_back("clean");
        for (const auto& d : dims)
            if (d != "clean") dim_order.push_back(d);

        auto total_of = [&](const std::map<std::string, double>& row) {
            double sum = 0;
            int n = 0;
            for (const auto& [dim, v] : row)
                if (dim != "clean") {
                    sum += v;
                    ++n;
                }
            return n ? sum / n : 0.0;
        };

        md << "## Success rates\n\n| variant |";
        for (const auto& d : dim_order) md << " " << d << " |";
        md << " total |\n|---|";
        for (size_t i = 0; i <= dim_order.size(); ++i) md << "---|";
        md << "\n";

        std::ofstream csv(out_dir + "/success_summary.csv");
        csv << "variant";
        for (const auto& d : dim_order) csv << "," << d;
        csv << ",total\n";

        for (const auto& [variant, row] : table) {
            md << "| " << variant << " |";
            csv << variant;
            for (const auto& d : dim_order) {
                double v = row.count(d) ? row.at(d) : 0.0;
                md << " " << v << " |";
                csv << "," << v;
            }
            double tot = total_of(row);
            md << " " << tot << " |\n";
            csv << "," << tot << "\n";
            summary["success"][variant] = tot;
        }

        // delta rows: every fused variant against the baseline
        if (table.count("baseline")) {
            const auto& base = table.at("baseline");
            for (const auto& [variant, row] : table) {
                if (variant == "baseline") continue;
                md << "| delta(" << variant << " - baseline) |";
                csv << "delta_" << variant;
                for (const auto& d : dim_order) {
                    double dv = (row.count(d) ? row.at(d) : 0.0) - (base.count(d) ? base.at(d) : 0.0);
                    md << " " << dv << " |";
                    csv << "," << dv;
                }
                double dt = total_of(row) - total_of(base);
                md << " " << dt << " |\n";
                csv << "," << dt << "\n";
                summary["delta"][variant] = dt;
            }
        }

        // success-rate chart
        std::vector<BarSeries> series;
        for (const auto& [variant, row] : table) {
            BarSeries s;
            s.name = variant;
            for (const auto& d : dim_order) s.values.push_back(row.count(d) ? row.at(d) : 0.0);
            series.push_back(std::move(s));
        }
        write_svg_bar_chart(out_dir + "/success.svg", "Success rate by perturbation dimension", dim_order, series,
                            "success rate");
        r.artifacts.push_back(out_dir + "/success_summary.csv");
        r.artifacts.push_back(out_dir + "/success.svg");
    }

    r.artifacts.push_back(out_dir + "/report.md");
    r.summary = summary;
    return r;
}

}  // namespace vlalab::cli
