#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "vlalab/sim/dataset.hpp"
#include "vlalab/sim/instruction.hpp"
#include "vlalab/sim/perturb.hpp"

using namespace vlalab::sim;
namespace fs = std::filesystem;

namespace {

std::string tmp_path(const char* name) { return (fs::temp_directory_path() / name).string(); }

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("clean expert datasets are all-success and frames re-render bit-exactly") {
    SceneConfig cfg;
    Dataset ds = collect_dataset(5, cfg, 12);
    for (const auto& traj : ds.trajectories) {
        CHECK(traj.success);
        CHECK(static_cast<int>(traj.steps.size()) <= cfg.horizon);
        for (size_t s = 0; s < traj.steps.size(); s += 7) {
            const auto& rec = traj.steps[s];
            std::vector<float> again =
                render(rec.state, traj.nuisance, cfg.resolution, frame_noise_seed(traj.traj_seed, rec.state.step_index));
            CHECK(rec.frame == again);
        }
    }
}

TEST_CASE("dataset files are byte-identical across re-collection and re-save") {
    SceneConfig cfg;
    cfg.light_enabled = true;
    cfg.brightness = {0.7f, 1.3f};
    std::string p1 = tmp_path("ds_a.bin"), p2 = tmp_path("ds_b.bin"), p3 = tmp_path("ds_c.bin");
    Dataset a = collect_dataset(3, cfg, 5);
    save_dataset(p1, a);
    Dataset b = collect_dataset(3, cfg, 5);
    save_dataset(p2, b);
    CHECK(slurp(p1) == slurp(p2));

    Dataset loaded = load_dataset(p1);
    save_dataset(p3, loaded);
    CHECK(slurp(p1) == slurp(p3));
    CHECK(loaded.id() == a.id());

    fs::remove(p1);
    fs::remove(p2);
    fs::remove(p3);
}

TEST_CASE("n_traj=0 is rejected") {
    SceneConfig cfg;
    CHECK_THROWS_AS(collect_dataset(0, cfg, 0), std::invalid_argument);
}

TEST_CASE("I/O failures surface the path") {
    SceneConfig cfg;
    Dataset ds = collect_dataset(1, cfg, 0);
    CHECK_THROWS_WITH_AS(save_dataset("/nonexistent_dir/x.bin", ds), doctest::Contains("/nonexistent_dir/x.bin"),
                         std::runtime_error);
    CHECK_THROWS_WITH_AS(load_dataset("/nonexistent_dir/x.bin"), doctest::Contains("/nonexistent_dir/x.bin"),
                         std::runtime_error);
}

TEST_CASE("state codec round-trips") {
    SceneConfig cfg;
    ResetResult r = reset(cfg, 9);
    r.world.holding = 1;
    r.world.step_index = 17;
    std::vector<float> v = encode_state(r.world);
    WorldState back = decode_state(v, cfg.object_count);
    CHECK(encode_state(back) == v);
    CHECK(back.holding.has_value());
    CHECK(*back.holding == 1);
}

TEST_CASE("task-relevant vector has dimension 2 + 2k") {
    SceneConfig cfg;
    cfg.object_count = 4;
    ResetResult r = reset(cfg, 0);
    CHECK(task_relevant_vector(r.world).size() == 2 + 2 * 4);
}

TEST_CASE("perturbation suites vary only their own dimension") {
    SceneConfig base;

    SUBCASE("light") {
        auto suite = perturbation_suite(base, PerturbDim::Light);
        CHECK(suite.size() >= 5);
        for (const auto& e : suite) {
            json jb, je;
            to_json(jb, base);
            to_json(je, e.config);
            for (auto& [key, val] : je.items()) {
                if (key == "light_enabled" || key == "brightness" || key == "tint_max") continue;
                CHECK(val == jb.at(key));
            }
            CHECK(e.config.light_enabled);
        }
    }

    SUBCASE("language paraphrases keep the target triple") {
        auto suite = perturbation_suite(base, PerturbDim::Language);
        CHECK(suite.size() == 5);
        ResetResult rb = reset(base, 3);
        InstructionTriple tb = decode_instruction(rb.instruction);
        for (const auto& e : suite) {
            ResetResult re = reset(e.config, 3);
            CHECK(re.instruction != rb.instruction);
            InstructionTriple te = decode_instruction(re.instruction);
            CHECK(te.color == tb.color);
            CHECK(te.shape == tb.shape);
            CHECK(te.region == tb.region);
        }
    }

    SUBCASE("camera offsets are nonzero, all else equal") {
        auto suite = perturbation_suite(base, PerturbDim::Camera);
        CHECK(suite.size() >= 5);
        for (const auto& e : suite) {
            ResetResult re = reset(e.config, 0);
            CHECK((re.nuisance.cam_dx != 0.f || re.nuisance.cam_dy != 0.f));
            ResetResult rb = reset(base, 0);
            CHECK(encode_state(re.world) == encode_state(rb.world));
        }
    }

    SUBCASE("layout adds distractors") {
        auto suite = perturbation_suite(base, PerturbDim::Layout);
        CHECK(suite.size() >= 5);
        for (const auto& e : suite) CHECK(e.config.object_count == base.object_count + 2);
    }

    SUBCASE("noise and background counts") {
        CHECK(perturbation_suite(base, PerturbDim::Noise).size() >= 5);
        CHECK(perturbation_suite(base, PerturbDim::Background).size() >= 5);
    }
}

TEST_CASE("unknown dimension name is rejected") {
    CHECK_THROWS_WITH_AS(parse_perturb_dim("gravity"), doctest::Contains("gravity"), std::invalid_argument);
}

TEST_CASE("expert still succeeds under perturbed configs") {
    SceneConfig base;
    for (PerturbDim d : all_perturb_dims()) {
        auto suite = perturbation_suite(base, d);
        const SceneConfig& cfg = suite.front().config;
        Dataset ds = collect_dataset(3, cfg, 77);
        for (const auto& traj : ds.trajectories) CHECK(traj.success);
    }
}
