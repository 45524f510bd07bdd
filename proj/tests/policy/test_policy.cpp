#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "vlalab/core/optim.hpp"
#include "vlalab/enc/pretrain.hpp"
#include "vlalab/policy/rollout.hpp"
#include "vlalab/policy/train.hpp"
#include "vlalab/sim/instruction.hpp"

#include "../support/attention_replay.hpp"

using namespace vlalab;
using namespace vlalab::policy;
namespace fs = std::filesystem;

namespace {

PolicyConfig tiny_policy(FusionMode fusion = FusionMode::None) {
    PolicyConfig c;
    c.layers = 2;
    c.width = 32;
    c.heads = 2;
    c.ff_dim = 64;
    c.chunk = 4;
    c.fusion = fusion;
    c.gated_interval = 1;
    c.batch = 8;
    c.train_steps = 60;
    return c;
}

PolicyInputs dummy_inputs(const PolicyConfig& cfg, uint64_t seed, bool with_features) {
    core::Rng rng(seed);
    PolicyInputs in;
    in.batch = 2;
    std::vector<int> instr = sim::encode_instruction(0, {1, 2, 3});
    for (int b = 0; b < in.batch; ++b) {
        std::vector<int> lang = prepare_instruction(instr, cfg.instr_len);
        in.lang.insert(in.lang.end(), lang.begin(), lang.end());
    }
    in.img_tokens = core::Tensor::uniform({in.batch, cfg.img_tokens(), cfg.patch * cfg.patch * 3}, rng, 0, 1);
    in.proprio = core::Tensor::uniform({in.batch, 3}, rng, 0, 1);
    if (with_features) in.features = core::Tensor::randn({in.batch, cfg.feat_tokens, cfg.feat_width}, rng);
    return in;
}

}  // namespace

TEST_CASE("codec round-trip stays within half a bin width for 10k actions") {
    ActionCodec codec;
    core::Rng rng(0);
    for (int i = 0; i < 10000; ++i) {
        sim::Action a{{static_cast<float>(rng.uniform(-0.1, 0.1)), static_cast<float>(rng.uniform(-0.1, 0.1))},
                      static_cast<float>(rng.uniform(-1, 1))};
        sim::Action b = codec.dequantize(codec.quantize(a));
        CHECK(std::abs(a.delta.x - b.delta.x) <= codec.bin_width(0) / 2 + 1e-7f);
        CHECK(std::abs(a.delta.y - b.delta.y) <= codec.bin_width(1) / 2 + 1e-7f);
        CHECK(std::abs(a.grip - b.grip) <= codec.bin_width(2) / 2 + 1e-7f);
    }
}

TEST_CASE("codec boundary tokens") {
    ActionCodec codec;
    sim::Action lo{{-0.1f, -0.1f}, -1.f};
    sim::Action hi{{0.1f, 0.1f}, 1.f};
    auto tl = codec.quantize(lo);
    auto th = codec.quantize(hi);
    for (int d = 0; d < 3; ++d) {
        CHECK(tl[static_cast<size_t>(d)] == 0);
        CHECK(th[static_cast<size_t>(d)] == 255);
    }
    sim::Action probe{{0.05f, -0.1f}, 1.0f};
    sim::Action back = codec.dequantize(codec.quantize(probe));
    CHECK(std::abs(back.delta.x - 0.05f) <= codec.bin_width(0) / 2 + 1e-7f);
    CHECK(std::abs(back.delta.y - (-0.1f)) <= codec.bin_width(1) / 2 + 1e-7f);
    CHECK(std::abs(back.grip - 1.0f) <= codec.bin_width(2) / 2 + 1e-7f);
}

TEST_CASE("sequence layout follows the token formula") {
    PolicyConfig c = tiny_policy();
    SeqLayout l = make_layout(c);
    CHECK(l.total == c.instr_len + c.img_tokens() + 1 + c.chunk);  // continuous mode
    CHECK(l.action_len == c.chunk);

    c.action_mode = ActionMode::Discrete256;
    l = make_layout(c);
    CHECK(l.action_len == c.chunk * 3);

    c = tiny_policy(FusionMode::Early);
    c.feat_tokens = 16;
    c.feat_width = 32;
    l = make_layout(c);
    CHECK(l.fused_len == 16);
    CHECK(l.total == c.instr_len + c.img_tokens() + 1 + 16 + c.chunk);

    // removing feature tokens recovers the baseline layout
    c.fusion = FusionMode::None;
    c.feat_tokens = 0;
    c.feat_width = 0;
    SeqLayout base = make_layout(c);
    CHECK(base.total == l.total - 16);
    CHECK(base.action_len == l.action_len);
}

TEST_CASE("instructions are validated and padded") {
    CHECK_THROWS_AS(prepare_instruction({}, 8), std::invalid_argument);
    CHECK_THROWS_AS(prepare_instruction(std::vector<int>(9, 1), 8), std::invalid_argument);
    std::vector<int> p = prepare_instruction({5, 6}, 8);
    CHECK(p.size() == 8);
    CHECK(p[2] == 0);
}

TEST_CASE("causal action mask blocks later slots and shields non-action tokens") {
    PolicyConfig c = tiny_policy();
    SeqLayout l = make_layout(c);
    core::Tensor m = causal_action_mask(l);
    const float ninf = -std::numeric_limits<float>::infinity();
    // slot 0 cannot see slot 1
    CHECK(m.data()[(l.action_ofs + 0) * l.total + (l.action_ofs + 1)] == ninf);
    // slot 1 sees slot 0 and itself
    CHECK(m.data()[(l.action_ofs + 1) * l.total + (l.action_ofs + 0)] == 0.f);
    CHECK(m.data()[(l.action_ofs + 1) * l.total + (l.action_ofs + 1)] == 0.f);
    // every non-action query is shielded from every action slot
    for (int q = 0; q < l.action_ofs; ++q)
        for (int kv = l.action_ofs; kv < l.total; ++kv) CHECK(m.data()[q * l.total + kv] == ninf);
    // action slots see all non-action tokens
    for (int kv = 0; kv < l.action_ofs; ++kv) CHECK(m.data()[(l.action_ofs + 2) * l.total + kv] == 0.f);
    // regenerating the mask is idempotent
    core::Tensor m2 = causal_action_mask(l);
    CHECK(m.values() == m2.values());
}

TEST_CASE("attention weights from action slots to later slots are exactly zero in the live model") {
    PolicyConfig c = tiny_policy();
    core::Rng rng(1);
    PolicyModel model(c, rng);
    PolicyInputs in = dummy_inputs(c, 2, false);

    const SeqLayout& l = model.layout;
    attention_replay::visit_attention(model, in, [&](int, const core::Tensor& w) {
        int64_t b = w.dim(0), t = w.dim(2);
        for (int64_t bi = 0; bi < b; ++bi)
            for (int hh = 0; hh < c.heads; ++hh)
                for (int i = l.action_ofs; i < l.total; ++i)
                    for (int j = i + 1; j < l.total; ++j)
                        CHECK(w.data()[((bi * c.heads + hh) * t + i) * t + j] == 0.0f);
    });
}

TEST_CASE("gate-zero gated forward equals the fusion-free path bit-exactly") {
    PolicyConfig c = tiny_policy(FusionMode::Gated);
    c.feat_tokens = 8;
    c.feat_width = 16;
    core::Rng rng(3);
    PolicyModel model(c, rng);
    PolicyInputs in = dummy_inputs(c, 4, true);
    core::Rng r1(0), r2(0);
    core::Tensor fused = model.forward_actions(in, false, r1, true);
    core::Tensor plain = model.forward_actions(in, false, r2, false);
    REQUIRE(fused.numel() == plain.numel());
    for (int64_t i = 0; i < fused.numel(); ++i) CHECK(fused.data()[i] == plain.data()[i]);
}

TEST_CASE("gradient reaches the gate and the early projection") {
    SUBCASE("gated") {
        PolicyConfig c = tiny_policy(FusionMode::Gated);
        c.feat_tokens = 8;
        c.feat_width = 16;
        core::Rng rng(5);
        PolicyModel model(c, rng);
        PolicyInputs in = dummy_inputs(c, 6, true);
        core::Rng r(0);
        core::Tensor out = model.forward_actions(in, true, r);
        core::backward(core::mean_all(out));
        bool any_gate_grad = false;
        for (const auto& g : model.gated) {
            REQUIRE(g.gate.has_grad());
            if (g.gate.grad()[0] != 0.f) any_gate_grad = true;
        }
        CHECK(any_gate_grad);
    }
    SUBCASE("early") {
        PolicyConfig c = tiny_policy(FusionMode::Early);
        c.feat_tokens = 8;
        c.feat_width = 16;
        core::Rng rng(7);
        PolicyModel model(c, rng);
        PolicyInputs in = dummy_inputs(c, 8, true);
        core::Rng r(0);
        core::Tensor out = model.forward_actions(in, true, r);
        core::backward(core::mean_all(out));
        CHECK(model.feat_proj.w.has_grad());
        double mag = 0;
        for (float g : model.feat_proj.w.grad()) mag += std::abs(g);
        CHECK(mag > 0.0);
    }
}

TEST_CASE("identical inputs produce identical token forwards") {
    PolicyConfig c = tiny_policy();
    core::Rng rng(9);
    PolicyModel model(c, rng);
    PolicyInputs in = dummy_inputs(c, 10, false);
    core::Rng r1(0), r2(0);
    core::Tensor a = model.forward_actions(in, false, r1);
    core::Tensor b = model.forward_actions(in, false, r2);
    CHECK(a.values() == b.values());
}

TEST_CASE("fusion without features is rejected") {
    PolicyConfig c = tiny_policy(FusionMode::Gated);
    c.feat_tokens = 8;
    c.feat_width = 16;
    core::Rng rng(11);
    PolicyModel model(c, rng);
    PolicyInputs in = dummy_inputs(c, 12, false);
    core::Rng r(0);
    CHECK_THROWS_AS(model.forward_actions(in, false, r), std::invalid_argument);
    CHECK_THROWS_AS(train_bc(sim::collect_dataset(2, sim::SceneConfig{}, 0), nullptr, c, 0), std::invalid_argument);
}

TEST_CASE("fusion LR group contract holds under unit gradients") {
    PolicyConfig c = tiny_policy(FusionMode::Gated);
    c.feat_tokens = 8;
    c.feat_width = 16;
    core::Rng rng(13);
    PolicyModel model(c, rng);
    core::ParamList base = model.base_params();
    core::ParamList fusion = model.fusion_params();
    CHECK_FALSE(fusion.items.empty());
    core::AdamW opt({core::ParamGroup{"base", base.tensors(), c.base_lr, 0.0},
                     core::ParamGroup{"fusion", fusion.tensors(), c.fusion_lr, 0.0}});
    for (auto& [n, t] : base.items) std::fill(t.grad().begin(), t.grad().end(), 1.f);
    for (auto& [n, t] : fusion.items) std::fill(t.grad().begin(), t.grad().end(), 1.f);
    float b0 = base.items[0].second.values()[0];
    float f0 = fusion.items[0].second.values()[0];
    opt.step();
    double db = std::abs(base.items[0].second.values()[0] - b0);
    double df = std::abs(fusion.items[0].second.values()[0] - f0);
    CHECK(db == doctest::Approx(c.base_lr).epsilon(1e-3));
    CHECK(df == doctest::Approx(c.fusion_lr).epsilon(1e-3));
}

TEST_CASE("group manifest lists fusion parameters only under the fusion group") {
    sim::SceneConfig scfg;
    sim::Dataset ds = sim::collect_dataset(16, scfg, 1);
    enc::ViTConfig vc;
    vc.depth = 1;
    enc::PretrainConfig pc;
    pc.steps = 2;
    pc.batch = 4;
    enc::PretrainResult er = enc::pretrain_video_predictive(ds, vc, pc, 0);

    PolicyConfig c = tiny_policy(FusionMode::Gated);
    c.train_steps = 3;
    PolicyCheckpoint ck = train_bc(ds, &er.checkpoint, c, 0);
    auto fusion_names = ck.train_log["optimizer_groups"]["fusion"].get<std::vector<std::string>>();
    auto base_names = ck.train_log["optimizer_groups"]["base"].get<std::vector<std::string>>();
    CHECK_FALSE(fusion_names.empty());
    for (const auto& n : fusion_names) {
        bool is_fusion = n.find("gated") != std::string::npos || n.find("feat_proj") != std::string::npos;
        CHECK(is_fusion);
        for (const auto& b : base_names) CHECK(b != n);
    }
}

TEST_CASE("behavior cloning smoke run: loss is finite and decreases") {
    sim::SceneConfig scfg;
    sim::Dataset ds = sim::collect_dataset(6, scfg, 2);
    PolicyConfig c = tiny_policy();
    c.train_steps = 80;
    PolicyCheckpoint ck = train_bc(ds, nullptr, c, 3);
    double first = ck.train_log["initial_loss"];
    double last = ck.train_log["final_loss"];
    CHECK(std::isfinite(first));
    CHECK(last < first);
}

TEST_CASE("discrete-mode targets equal the quantized expert actions") {
    sim::SceneConfig scfg;
    sim::Dataset ds = sim::collect_dataset(2, scfg, 4);
    const auto& traj = ds.trajectories[0];
    std::vector<sim::Action> chunk = chunk_targets(traj, 0, 4);
    ActionCodec codec;
    auto toks = codec.quantize(chunk[0]);
    auto direct = codec.quantize(traj.steps[0].action);
    CHECK(toks == direct);
    // past termination the final action repeats
    std::vector<sim::Action> tail = chunk_targets(traj, traj.steps.size() - 1, 4);
    for (int i = 1; i < 4; ++i) {
        CHECK(tail[static_cast<size_t>(i)].delta.x == tail[0].delta.x);
        CHECK(tail[static_cast<size_t>(i)].grip == tail[0].grip);
    }
}

TEST_CASE("policy checkpoints round-trip through the container") {
    sim::SceneConfig scfg;
    sim::Dataset ds = sim::collect_dataset(3, scfg, 5);
    PolicyConfig c = tiny_policy();
    c.train_steps = 5;
    PolicyCheckpoint ck = train_bc(ds, nullptr, c, 6);
    std::string path = (fs::temp_directory_path() / "policy_ck.bin").string();
    save_policy(path, ck);
    PolicyCheckpoint back = load_policy(path);
    CHECK(back.config.chunk == c.chunk);
    PolicyInputs in = dummy_inputs(back.config, 1, false);
    core::Rng r1(0), r2(0);
    core::Tensor a = ck.model.forward_actions(in, false, r1);
    core::Tensor b = back.model.forward_actions(in, false, r2);
    CHECK(a.values() == b.values());
    fs::remove(path);
}

TEST_CASE("expert wrapped as a chunked policy keeps a perfect clean success rate") {
    sim::SceneConfig scfg;
    ExpertPlanner expert(10);
    std::vector<LabeledConfig> configs = {{"clean", "clean", scfg}};
    auto rows = rollout_eval(expert, configs, 40, 7, "expert");
    CHECK(rows.size() == 1);
    CHECK(rows[0].success_rate == 1.0);

    // determinism of the table
    auto again = rollout_eval(expert, configs, 40, 7, "expert");
    CHECK(again[0].success_rate == rows[0].success_rate);
}

TEST_CASE("random policy almost never succeeds") {
    sim::SceneConfig scfg;
    RandomPlanner rnd(10, 1);
    std::vector<LabeledConfig> configs = {{"clean", "clean", scfg}};
    auto rows = rollout_eval(rnd, configs, 100, 8, "random");
    CHECK(rows[0].success_rate <= 0.05);
}

TEST_CASE("eval tables persist through CSV round-trips") {
    std::vector<EvalRow> rows = {{"light", "brightness_0.5", "baseline", 0.42, 100, 9},
                                 {"clean", "clean", "gated", 0.97, 100, 9}};
    std::string path = (fs::temp_directory_path() / "eval.csv").string();
    write_eval_csv(path, rows);
    auto back = read_eval_csv(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].label == "brightness_0.5");
    CHECK(back[0].success_rate == doctest::Approx(0.42));
    CHECK(back[1].variant == "gated");
    fs::remove(path);
}
