#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "vlalab/cli/commands.hpp"
#include "vlalab/cli/svg.hpp"

using namespace vlalab;
using namespace vlalab::cli;
namespace fs = std::filesystem;

namespace {

std::string tmp_dir(const char* name) {
    std::string d = (fs::temp_directory_path() / name).string();
    fs::create_directories(d);
    return d;
}

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE_MESSAGE(is.good(), "missing ", path);
    return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

ExperimentConfig small_cfg() {
    ExperimentConfig cfg;
    cfg.sim_n_traj = 12;
    cfg.pretrain.steps = 4;
    cfg.pretrain.batch = 4;
    cfg.probe_cfg.depth = 1;
    cfg.probe_cfg.width = 16;
    cfg.probe_cfg.heads = 2;
    cfg.probe_cfg.ff_dim = 32;
    cfg.probe_cfg.max_epochs = 2;
    cfg.policy_cfg.layers = 1;
    cfg.policy_cfg.gated_interval = 1;
    cfg.policy_cfg.width = 16;
    cfg.policy_cfg.heads = 2;
    cfg.policy_cfg.ff_dim = 32;
    cfg.policy_cfg.chunk = 4;
    cfg.policy_cfg.train_steps = 4;
    cfg.policy_cfg.batch = 4;
    cfg.eval_episodes = 2;
    cfg.eval_dims = {"light"};
    return cfg;
}

}  // namespace

TEST_CASE("config round-trips losslessly and hashes its content") {
    ExperimentConfig a;
    json j = a.to_json();
    ExperimentConfig b = ExperimentConfig::parse(j);
    CHECK(b.to_json() == j);
    CHECK(a.hash() == b.hash());

    a.sim_n_traj = 99;
    CHECK(a.hash() != b.hash());
}

TEST_CASE("unknown keys are rejected by name") {
    json j;
    j["sim"]["n_traj"] = 10;
    j["sim"]["gravity"] = 9.8;
    CHECK_THROWS_WITH_AS(ExperimentConfig::parse(j), doctest::Contains("gravity"), std::invalid_argument);

    json top;
    top["simulator"] = json::object();
    CHECK_THROWS_WITH_AS(ExperimentConfig::parse(top), doctest::Contains("simulator"), std::invalid_argument);
}

TEST_CASE("sparse configs merge onto defaults") {
    json j;
    j["policy"]["chunk"] = 5;
    ExperimentConfig cfg = ExperimentConfig::parse(j);
    CHECK(cfg.policy_cfg.chunk == 5);
    CHECK(cfg.policy_cfg.layers == 8);  // untouched default
}

TEST_CASE("presets") {
    ExperimentConfig cfg;
    cfg.apply_preset("desk");
    CHECK(cfg.probe_cfg.depth == 2);
    cfg.apply_preset("paper");
    CHECK(cfg.probe_cfg.depth == 12);
    CHECK(cfg.probe_cfg.heads == 16);
    CHECK(cfg.probe_cfg.ff_dim == 3072);
    CHECK(cfg.policy_cfg.gated_interval == 8);
    CHECK_THROWS_AS(cfg.apply_preset("galaxy"), std::invalid_argument);
}

TEST_CASE("missing config file errors with its path") {
    CHECK_THROWS_WITH_AS(ExperimentConfig::load("/no/such/config.json"), doctest::Contains("/no/such/config.json"),
                         std::runtime_error);
}

TEST_CASE("simgen writes byte-identical datasets for identical (config, seed)") {
    ExperimentConfig cfg = small_cfg();
    std::string d1 = tmp_dir("cli_simgen_a"), d2 = tmp_dir("cli_simgen_b");
    CommandResult r1 = cmd_simgen(cfg, 5, d1);
    CommandResult r2 = cmd_simgen(cfg, 5, d2);
    CHECK(slurp(d1 + "/dataset.bin") == slurp(d2 + "/dataset.bin"));
    CHECK(r1.summary["successes"] == 12);

    RunManifest m;
    m.command = "simgen";
    m.config_hash = cfg.hash();
    m.seeds = {5};
    m.artifacts = r1.artifacts;
    m.write(d1);
    json parsed = json::parse(slurp(d1 + "/manifest.json"));
    CHECK(parsed["command"] == "simgen");
    CHECK(parsed["artifacts"].size() == 1);
    fs::remove_all(d1);
    fs::remove_all(d2);
}

TEST_CASE("pretrain command trains every family and surfaces unknown ones") {
    ExperimentConfig cfg = small_cfg();
    std::string data_dir = tmp_dir("cli_data");
    cmd_simgen(cfg, 1, data_dir);
    std::string enc_dir = tmp_dir("cli_enc");
    CommandResult r = cmd_pretrain("video_predictive", cfg, data_dir + "/dataset.bin", 0, enc_dir);
    CHECK(fs::exists(enc_dir + "/encoder.bin"));
    CHECK(fs::exists(enc_dir + "/metrics.jsonl"));
    CHECK_FALSE(r.summary["collapse_flag"].get<bool>());

    CHECK_THROWS_WITH_AS(cmd_pretrain("resnet", cfg, data_dir + "/dataset.bin", 0, enc_dir),
                         doctest::Contains("resnet"), std::invalid_argument);
    fs::remove_all(data_dir);
    fs::remove_all(enc_dir);
}

TEST_CASE("train-policy requires an encoder for fusion and smoke-trains otherwise") {
    ExperimentConfig cfg = small_cfg();
    std::string data_dir = tmp_dir("cli_data2");
    cmd_simgen(cfg, 2, data_dir);

    std::string pol_dir = tmp_dir("cli_policy");
    CommandResult r = cmd_train_policy(data_dir + "/dataset.bin", "", cfg, 0, pol_dir);
    CHECK(fs::exists(pol_dir + "/policy.bin"));
    CHECK(fs::exists(pol_dir + "/metrics.jsonl"));
    CHECK(std::isfinite(r.summary["final_loss"].get<double>()));

    ExperimentConfig fused = cfg;
    fused.policy_cfg.fusion = policy::FusionMode::Gated;
    CHECK_THROWS_WITH_AS(cmd_train_policy(data_dir + "/dataset.bin", "", fused, 0, pol_dir),
                         doctest::Contains("--encoder"), std::invalid_argument);
    fs::remove_all(data_dir);
    fs::remove_all(pol_dir);
}

TEST_CASE("eval emits one row per config including the clean row, deterministically") {
    ExperimentConfig cfg = small_cfg();
    std::string data_dir = tmp_dir("cli_data3");
    cmd_simgen(cfg, 3, data_dir);
    std::string pol_dir = tmp_dir("cli_policy3");
    cmd_train_policy(data_dir + "/dataset.bin", "", cfg, 0, pol_dir);

    std::string eval_dir = tmp_dir("cli_eval3");
    cmd_eval(pol_dir + "/policy.bin", "", cfg, 4, eval_dir, "baseline");
    auto rows = policy::read_eval_csv(eval_dir + "/success.csv");
    CHECK(rows.size() == 1 + 5);  // clean + light suite
    CHECK(rows[0].dimension == "clean");
    for (const auto& row : rows) CHECK(row.variant == "baseline");

    std::string eval_dir2 = tmp_dir("cli_eval3b");
    cmd_eval(pol_dir + "/policy.bin", "", cfg, 4, eval_dir2, "baseline");
    CHECK(slurp(eval_dir + "/success.csv") == slurp(eval_dir2 + "/success.csv"));

    // report over the single variant
    std::string rep_dir = tmp_dir("cli_report3");
    CommandResult rep = cmd_report("", {eval_dir}, rep_dir);
    CHECK(fs::exists(rep_dir + "/report.md"));
    CHECK(fs::exists(rep_dir + "/success_summary.csv"));
    CHECK(fs::exists(rep_dir + "/success.svg"));

    CHECK_THROWS_AS(cmd_report("", {"/no/such/dir"}, rep_dir), std::runtime_error);

    fs::remove_all(data_dir);
    fs::remove_all(pol_dir);
    fs::remove_all(eval_dir);
    fs::remove_all(eval_dir2);
    fs::remove_all(rep_dir);
}

TEST_CASE("report computes deltas as fused minus baseline and totals as dimension means") {
    std::string ea = tmp_dir("cli_eval_base"), eb = tmp_dir("cli_eval_fused"), out = tmp_dir("cli_report_delta");
    policy::write_eval_csv(ea + "/success.csv", {{"clean", "clean", "baseline", 0.9, 10, 0},
                                                 {"light", "b_0.5", "baseline", 0.2, 10, 0},
                                                 {"light", "b_1.5", "baseline", 0.4, 10, 0},
                                                 {"background", "p0", "baseline", 0.1, 10, 0}});
    policy::write_eval_csv(eb + "/success.csv", {{"clean", "clean", "gated", 0.9, 10, 0},
                                                 {"light", "b_0.5", "gated", 0.5, 10, 0},
                                                 {"light", "b_1.5", "gated", 0.7, 10, 0},
                                                 {"background", "p0", "gated", 0.3, 10, 0}});
    CommandResult r = cmd_report("", {ea, eb}, out);
    // baseline total = mean(light 0.3, background 0.1) = 0.2; gated = mean(0.6, 0.3) = 0.45
    CHECK(r.summary["success"]["baseline"].get<double>() == doctest::Approx(0.2));
    CHECK(r.summary["success"]["gated"].get<double>() == doctest::Approx(0.45));
    CHECK(r.summary["delta"]["gated"].get<double>() == doctest::Approx(0.25));

    std::string csv = slurp(out + "/success_summary.csv");
    CHECK(csv.find("delta_gated") != std::string::npos);
    fs::remove_all(ea);
    fs::remove_all(eb);
    fs::remove_all(out);
}

TEST_CASE("svg charts validate their inputs") {
    std::string path = (fs::temp_directory_path() / "chart.svg").string();
    write_svg_bar_chart(path, "t", {"a", "b"}, {{"s", {0.1, 0.2}}}, "y");
    std::string svg = slurp(path);
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK_THROWS_AS(write_svg_bar_chart(path, "t", {"a"}, {{"s", {0.1, 0.2}}}, "y"), std::invalid_argument);
    fs::remove(path);
}
