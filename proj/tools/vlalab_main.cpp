#include <chrono>
#include <cstdio>

#include <CLI11.hpp>

#include "vlalab/cli/commands.hpp"

using namespace vlalab;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string preset = "desk";
    std::string out_dir = "runs/out";
    uint64_t seed = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON experiment config (defaults apply per field)");
    cmd->add_option("--preset", args.preset, "desk|paper")->check(CLI::IsMember({"desk", "paper"}));
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed, "master seed");
}

cli::ExperimentConfig resolve_config(const CommonArgs& args) {
    cli::ExperimentConfig cfg;
    cfg.apply_preset(args.preset);
    if (!args.config_path.empty()) {
        cli::ExperimentConfig from_file = cli::ExperimentConfig::load(args.config_path);
        // file overrides the preset wholesale; preset then re-applies only if desk
        cfg = from_file;
        if (args.preset != "desk") cfg.apply_preset(args.preset);
    }
    return cfg;
}

int run_command(const CommonArgs& args, const std::string& name,
                const std::function<cli::CommandResult(const cli::ExperimentConfig&)>& fn) {
    auto t0 = std::chrono::steady_clock::now();
    cli::ExperimentConfig cfg = resolve_config(args);
    cli::CommandResult res = fn(cfg);
    cli::RunManifest manifest;
    manifest.command = name;
    manifest.config_hash = cfg.hash();
    manifest.seeds = {args.seed};
    manifest.artifacts = res.artifacts;
    manifest.wall_clock_sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    manifest.write(args.out_dir);
    std::printf("%s\n", res.summary.dump(2).c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"vlalab: a desk-scale lab for video-predictive embeddings in vision-language-action policies"};
    app.require_subcommand(1);

    CommonArgs simgen_args;
    auto* simgen = app.add_subcommand("simgen", "collect an expert demonstration dataset");
    add_common(simgen, simgen_args);

    CommonArgs pre_args;
    std::string family, pre_data;
    auto* pretrain = app.add_subcommand("pretrain", "pretrain one encoder family");
    add_common(pretrain, pre_args);
    pretrain->add_option("--family", family, "video_predictive|aug_selfsup|lang_contrastive")->required();
    pretrain->add_option("--data", pre_data, "dataset file")->required();

    CommonArgs probe_args;
    std::vector<std::string> probe_encoders;
    std::string probe_data;
    auto* probe_cmd = app.add_subcommand("probe", "compare frozen encoders under the probing protocol");
    add_common(probe_cmd, probe_args);
    probe_cmd->add_option("--encoder", probe_encoders, "encoder checkpoint (repeatable)")->required();
    probe_cmd->add_option("--data", probe_data, "dataset file")->required();

    CommonArgs train_args;
    std::string train_data, train_encoder;
    auto* train = app.add_subcommand("train-policy", "behavior-clone a policy");
    add_common(train, train_args);
    train->add_option("--data", train_data, "dataset file")->required();
    train->add_option("--encoder", train_encoder, "frozen encoder (required for fusion)");

    CommonArgs eval_args;
    std::string eval_policy, eval_encoder, eval_variant = "policy";
    auto* eval_cmd = app.add_subcommand("eval", "roll out a policy across perturbation suites");
    add_common(eval_cmd, eval_args);
    eval_cmd->add_option("--policy", eval_policy, "policy checkpoint")->required();
    eval_cmd->add_option("--encoder", eval_encoder, "frozen encoder (required for fused policies)");
    eval_cmd->add_option("--variant", eval_variant, "variant label in the success table");

    CommonArgs report_args;
    std::string report_probe;
    std::vector<std::string> report_evals;
    auto* report = app.add_subcommand("report", "consolidate probe and eval outputs");
    add_common(report, report_args);
    report->add_option("--probe", report_probe, "probe output directory");
    report->add_option("--eval", report_evals, "eval output directory (repeatable)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (simgen->parsed())
            return run_command(simgen_args, "simgen", [&](const cli::ExperimentConfig& cfg) {
                return cli::cmd_simgen(cfg, simgen_args.seed, simgen_args.out_dir);
            });
        if (pretrain->parsed())
            return run_command(pre_args, "pretrain", [&](const cli::ExperimentConfig& cfg) {
                return cli::cmd_pretrain(family, cfg, pre_data, pre_args.seed, pre_args.out_dir);
            });
        if (probe_cmd->parsed())
            return run_command(probe_args, "probe", [&](const cli::ExperimentConfig& cfg) {
                return cli::cmd_probe(probe_encoders, probe_data, cfg, probe_args.out_dir);
            });
        if (train->parsed())
            return run_command(train_args, "train-policy", [&](const cli::ExperimentConfig& cfg) {
                return cli::cmd_train_policy(train_data, train_encoder, cfg, train_args.seed, train_args.out_dir);
            });
        if (eval_cmd->parsed())
            return run_command(eval_args, "eval", [&](const cli::ExperimentConfig& cfg) {
                return cli::cmd_eval(eval_policy, eval_encoder, cfg, eval_args.seed, eval_args.out_dir, eval_variant);
            });
        if (report->parsed())
            return run_command(report_args, "report", [&](const cli::ExperimentConfig&) {
                return cli::cmd_report(report_probe, report_evals, report_args.out_dir);
            });
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
