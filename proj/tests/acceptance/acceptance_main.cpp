// Acceptance suite: runs each criterion at its pinned tolerance and prints
// one pass/fail line per criterion. Heavy artifacts (the perturbed dataset,
// pretrained encoders, cloned policies) are cached under --artifacts and
// shared across criteria; caching is sound because every build step is
// bit-deterministic in (config, seed).

#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>

#include "../support/attention_replay.hpp"
#include "../support/gradcheck.hpp"
#include "vlalab/cli/commands.hpp"
#include "vlalab/enc/pretrain.hpp"
#include "vlalab/policy/rollout.hpp"
#include "vlalab/policy/train.hpp"
#include "vlalab/probe/tasks.hpp"
#include "vlalab/sim/instruction.hpp"

using namespace vlalab;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

double now_sec() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("missing file: " + path);
    return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

// ---------------------------------------------------------------------------
// pinned experiment definitions
// ---------------------------------------------------------------------------

sim::SceneConfig perturbed_scene() {
    sim::SceneConfig c;
    c.object_count = 3;
    c.resolution = 32;
    c.light_enabled = true;
    c.brightness = {0.5f, 1.5f};
    c.tint_max = 0.2f;
    c.background_enabled = true;
    c.bg_palette_set = 0;
    c.camera_enabled = true;
    c.cam_dx = {-2.f, 2.f};
    c.cam_dy = {-2.f, 2.f};
    c.noise_enabled = true;
    c.noise_sigma = {0.f, 0.05f};
    return c;
}

sim::SceneConfig clean_scene() { return sim::SceneConfig{}; }

enc::PretrainConfig pretrain_cfg() { return enc::PretrainConfig{}; }

probe::ProbeConfig probe_cfg() { return probe::ProbeConfig::desk(); }

policy::PolicyConfig baseline_policy_cfg() { return policy::PolicyConfig{}; }

policy::PolicyConfig gated_policy_cfg() {
    policy::PolicyConfig c;
    c.fusion = policy::FusionMode::Gated;
    return c;
}

constexpr uint64_t kProbeDatasetSeed = 1000;
constexpr int kProbeDatasetTraj = 500;
constexpr uint64_t kPretrainSeed = 7;
constexpr uint64_t kCleanDatasetSeed = 2000;
constexpr int kCleanDatasetTraj = 50;
const std::vector<uint64_t> kProbeSeeds = {0, 1, 2};
const std::vector<uint64_t> kPolicySeeds = {0, 1};
constexpr int kEvalEpisodes = 100;
constexpr uint64_t kEvalSeed = 9;

// ---------------------------------------------------------------------------
// shared artifact store
// ---------------------------------------------------------------------------

struct Artifacts {
    std::string dir;
    json meta;

    explicit Artifacts(std::string d) : dir(std::move(d)) {
        fs::create_directories(dir);
        std::string mp = dir + "/meta.json";
        if (fs::exists(mp)) meta = json::parse(slurp(mp));
    }

    void save_meta() {
        std::ofstream os(dir + "/meta.json");
        os << meta.dump(2) << "\n";
    }

    sim::Dataset probe_dataset() {
        std::string path = dir + "/probe_dataset.bin";
        if (!fs::exists(path)) {
            std::printf("  [artifacts] collecting %d perturbed trajectories...\n", kProbeDatasetTraj);
            sim::Dataset ds = sim::collect_dataset(kProbeDatasetTraj, perturbed_scene(), kProbeDatasetSeed);
            sim::save_dataset(path, ds);
            return ds;
        }
        return sim::load_dataset(path);
    }

    sim::Dataset clean_dataset() {
        std::string path = dir + "/clean_dataset.bin";
        if (!fs::exists(path)) {
            sim::Dataset ds = sim::collect_dataset(kCleanDatasetTraj, clean_scene(), kCleanDatasetSeed);
            sim::save_dataset(path, ds);
            return ds;
        }
        return sim::load_dataset(path);
    }

    enc::EncoderCheckpoint encoder(enc::EncoderFamily family) {
        std::string name = enc::family_name(family);
        std::string path = dir + "/encoder_" + name + ".bin";
        if (!fs::exists(path)) {
            sim::Dataset ds = probe_dataset();
            std::printf("  [artifacts] pretraining %s...\n", name.c_str());
            double t0 = now_sec();
            enc::PretrainResult r;
            switch (family) {
                case enc::EncoderFamily::VideoPredictive:
                    r = enc::pretrain_video_predictive(ds, enc::ViTConfig{}, pretrain_cfg(), kPretrainSeed);
                    break;
                case enc::EncoderFamily::AugSelfsup:
                    r = enc::pretrain_aug_selfsup(ds, enc::ViTConfig{}, pretrain_cfg(), kPretrainSeed);
                    break;
                default:
                    r = enc::pretrain_lang_contrastive(ds, enc::ViTConfig{}, pretrain_cfg(), kPretrainSeed);
                    break;
            }
            enc::save_encoder(path, r.checkpoint);
            meta["pretrain_seconds"][name] = now_sec() - t0;
            meta["collapse_flag"][name] = r.collapse_flag;
            meta["collapse_mean_std"][name] = r.log["collapse"]["mean_std"];
            save_meta();
        }
        return enc::load_encoder(path);
    }

    policy::PolicyCheckpoint policy(bool gated, uint64_t seed) {
        std::string name = std::string(gated ? "gated" : "baseline") + "_s" + std::to_string(seed);
        std::string path = dir + "/policy_" + name + ".bin";
        if (!fs::exists(path)) {
            sim::Dataset ds = clean_dataset();
            std::printf("  [artifacts] behavior-cloning %s...\n", name.c_str());
            double t0 = now_sec();
            std::optional<enc::EncoderCheckpoint> video;
            if (gated) video = encoder(enc::EncoderFamily::VideoPredictive);
            policy::PolicyCheckpoint ck =
                policy::train_bc(ds, video ? &*video : nullptr, gated ? gated_policy_cfg() : baseline_policy_cfg(), seed);
            policy::save_policy(path, ck);
            meta["bc_seconds"][name] = now_sec() - t0;
            meta["bc_final_loss"][name] = ck.train_log["final_loss"];
            save_meta();
        }
        return policy::load_policy(path);
    }

    std::vector<policy::EvalRow> eval_rows(bool gated, uint64_t seed) {
        std::string name = std::string(gated ? "gated" : "baseline") + "_s" + std::to_string(seed);
        std::string path = dir + "/eval_" + name + ".csv";
        if (!fs::exists(path)) {
            policy::PolicyCheckpoint ck = policy(gated, seed);
            std::optional<enc::EncoderCheckpoint> video;
            if (gated) video = encoder(enc::EncoderFamily::VideoPredictive);
            policy::LearnedPlanner planner(ck, video ? &*video : nullptr);
            std::vector<policy::LabeledConfig> configs = {{"clean", "clean", clean_scene()}};
            for (sim::PerturbDim dim : {sim::PerturbDim::Light, sim::PerturbDim::Background})
                for (const auto& e : sim::perturbation_suite(clean_scene(), dim))
                    configs.push_back({sim::perturb_dim_name(dim), e.label, e.config});
            std::printf("  [artifacts] rolling out %s over %zu configs x %d episodes...\n", name.c_str(), configs.size(),
                        kEvalEpisodes);
            auto rows = policy::rollout_eval(planner, configs, kEvalEpisodes, kEvalSeed, name);
            policy::write_eval_csv(path, rows);
            return rows;
        }
        return policy::read_eval_csv(path);
    }

    probe::ProbeReport probe_report() {
        std::string path = dir + "/probe_report";
        if (!fs::exists(path + "/report.jsonl")) {
            sim::Dataset ds = probe_dataset();
            enc::EncoderCheckpoint video = encoder(enc::EncoderFamily::VideoPredictive);
            enc::EncoderCheckpoint selfsup = encoder(enc::EncoderFamily::AugSelfsup);
            enc::EncoderCheckpoint lang = encoder(enc::EncoderFamily::LangContrastive);
            std::printf("  [artifacts] probing 3 encoders x 4 tasks x %zu seeds...\n", kProbeSeeds.size());
            probe::ProbeReport rep = probe::compare_encoders({{"video_predictive", &video},
                                                              {"aug_selfsup", &selfsup},
                                                              {"lang_contrastive", &lang}},
                                                             ds, probe_cfg(), kProbeSeeds, dir + "/feature_cache");
            probe::write_probe_report(rep, path);
            return rep;
        }
        // rebuild the in-memory report from the persisted jsonl
        probe::ProbeReport rep;
        std::ifstream is(path + "/report.jsonl");
        std::string line;
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            json j = json::parse(line);
            if (!j.contains("task")) {
                rep.meta = j.value("meta", json::object());
                continue;
            }
            probe::ProbeEntry e;
            e.task = j.at("task");
            e.encoder = j.at("encoder");
            e.losses = j.at("losses").get<std::vector<double>>();
            e.mean = j.at("mean");
            e.stddev = j.at("stddev");
            e.relative = j.at("relative");
            rep.entries.push_back(std::move(e));
        }
        return rep;
    }
};

// ---------------------------------------------------------------------------
// criteria
// ---------------------------------------------------------------------------

struct Outcome {
    bool pass = true;
    std::string detail;
};

using CriterionFn = std::function<Outcome(Artifacts&)>;

Outcome criterion_1_gradients(Artifacts&) {
    using T = core::TensorT<double>;
    Outcome out;
    double worst = 0;
    std::string where;
    auto run = [&](const char* name, gradcheck::Result r) {
        if (r.max_rel_error > worst) {
            worst = r.max_rel_error;
            where = name;
        }
        if (r.max_rel_error > 1e-4) {
            out.pass = false;
            out.detail += std::string(name) + " rel_err=" + std::to_string(r.max_rel_error) + "; ";
        }
    };
    core::Rng rng(0);
    auto rand_t = [&](core::Shape s) { return T::randn(std::move(s), rng); };

    {
        auto a = rand_t({4, 6}), b = rand_t({6, 3});
        run("matmul", gradcheck::check({a, b}, [&]() { return core::sum_all(core::matmul(a, b)); }));
    }
    {
        auto a = rand_t({2, 4, 3}), b = rand_t({2, 3, 5});
        run("matmul_batched", gradcheck::check({a, b}, [&]() { return core::sum_all(core::matmul(a, b)); }));
    }
    {
        auto a = rand_t({4, 6}), b = rand_t({6}), c = rand_t({4, 6});
        run("add_sub_mul", gradcheck::check({a, b, c}, [&]() {
                return core::sum_all(core::mul(core::sub(core::add(a, b), c), c));
            }));
    }
    {
        auto x = rand_t({4, 6}), w = rand_t({4, 6});
        run("softmax", gradcheck::check({x}, [&]() { return core::sum_all(core::mul(core::softmax(x), w)); }));
        run("gelu", gradcheck::check({x}, [&]() { return core::sum_all(core::mul(core::gelu(x), w)); }));
        run("tanh", gradcheck::check({x}, [&]() { return core::sum_all(core::mul(core::tanh_op(x), w)); }));
        run("sigmoid", gradcheck::check({x}, [&]() { return core::sum_all(core::mul(core::sigmoid(x), w)); }));
        run("exp", gradcheck::check({x}, [&]() { return core::sum_all(core::mul(core::exp_op(x), w)); }));
        run("l2_normalize", gradcheck::check({x}, [&]() { return core::sum_all(core::mul(core::l2_normalize(x), w)); }));
        run("reductions", gradcheck::check({x}, [&]() { return core::mean_all(core::mul(x, x)); }));
    }
    {
        auto x = rand_t({4, 6}), gamma = rand_t({6}), beta = rand_t({6}), w = rand_t({4, 6});
        run("layer_norm", gradcheck::check({x, gamma, beta}, [&]() {
                return core::sum_all(core::mul(core::layer_norm(x, gamma, beta), w));
            }));
    }
    {
        auto table = rand_t({5, 4});
        std::vector<int> ids = {0, 3, 3, 1};
        auto w = rand_t({4, 4});
        run("embedding", gradcheck::check({table}, [&]() {
                return core::sum_all(core::mul(core::embedding(table, ids), w));
            }));
    }
    {
        auto a = rand_t({4, 6}), b = rand_t({4, 6});
        run("shape_ops", gradcheck::check({a, b}, [&]() {
                auto cat = core::concat<double>({a, b}, 1);
                auto sl = core::slice(core::transpose(cat, {1, 0}), 0, 2, 7);
                return core::sum_all(core::mul(core::reshape(sl, {28}), core::reshape(sl, {28})));
            }));
    }
    {
        auto x = rand_t({4, 6}), w = rand_t({4, 6});
        run("dropout", gradcheck::check({x}, [&]() {
                core::Rng drop(42);
                return core::sum_all(core::mul(core::dropout(x, 0.4, true, drop), w));
            }));
    }
    {
        auto q = rand_t({1, 2, 4, 3}), k = rand_t({1, 2, 4, 3}), v = rand_t({1, 2, 4, 3}), w = rand_t({1, 2, 4, 3});
        T mask = T::zeros({4, 4});
        for (int i = 0; i < 4; ++i)
            for (int j = i + 1; j < 4; ++j) mask.data()[i * 4 + j] = -std::numeric_limits<double>::infinity();
        run("attention", gradcheck::check({q, k, v}, [&]() {
                return core::sum_all(core::mul(core::attention(q, k, v, &mask), w));
            }));
    }
    {
        auto logits = rand_t({4, 6});
        std::vector<int> targets = {1, 0, 5, 2};
        run("cross_entropy", gradcheck::check({logits}, [&]() { return core::cross_entropy(logits, targets); }));
        auto sq = rand_t({4, 4});
        run("pairwise_sigmoid", gradcheck::check({sq}, [&]() { return core::pairwise_sigmoid_loss(sq); }));
    }
    {
        auto a = rand_t({4, 6}), b = rand_t({4, 6});
        for (int64_t i = 0; i < a.numel(); ++i)
            if (std::abs(a.data()[i] - b.data()[i]) < 1e-3) a.data()[i] += 0.01;
        run("l1", gradcheck::check({a, b}, [&]() { return core::l1_loss(a, b); }));
        run("mse", gradcheck::check({a, b}, [&]() { return core::mse_loss(a, b); }));
        run("cosine", gradcheck::check({a, b}, [&]() { return core::mean_all(core::cosine_similarity(a, b)); }));
    }
    std::ostringstream os;
    os << "max rel err " << worst << " (" << where << ")";
    if (out.pass) out.detail = os.str();
    return out;
}

Outcome criterion_2_gate_zero(Artifacts&) {
    Outcome out;
    double worst = 0;
    for (uint64_t trial = 0; trial < 10; ++trial) {
        policy::PolicyConfig cfg = gated_policy_cfg();
        cfg.feat_tokens = 16;
        cfg.feat_width = 128;
        core::Rng rng(core::mix_seed(100, trial));
        policy::PolicyModel model(cfg, rng);
        policy::PolicyInputs in;
        in.batch = 1;
        in.lang = policy::prepare_instruction(sim::encode_instruction(0, {0, 1, 2}), cfg.instr_len);
        in.img_tokens = core::Tensor::uniform({1, cfg.img_tokens(), cfg.patch * cfg.patch * 3}, rng, 0, 1);
        in.proprio = core::Tensor::uniform({1, 3}, rng, 0, 1);
        in.features = core::Tensor::randn({1, cfg.feat_tokens, cfg.feat_width}, rng);
        core::Rng r1(0), r2(0);
        core::Tensor fused = model.forward_actions(in, false, r1, true);
        core::Tensor plain = model.forward_actions(in, false, r2, false);
        for (int64_t i = 0; i < fused.numel(); ++i)
            worst = std::max(worst, static_cast<double>(std::abs(fused.data()[i] - plain.data()[i])));
    }
    out.pass = worst < 1e-6;
    out.detail = "max |fused - baseline| = " + std::to_string(worst) + " over 10 random inputs";
    return out;
}

Outcome criterion_3_mask(Artifacts&) {
    Outcome out;
    policy::PolicyConfig cfg = baseline_policy_cfg();
    core::Rng rng(3);
    policy::PolicyModel model(cfg, rng);
    policy::PolicyInputs in;
    in.batch = 2;
    for (int b = 0; b < 2; ++b) {
        auto lang = policy::prepare_instruction(sim::encode_instruction(0, {b, 1, 2}), cfg.instr_len);
        in.lang.insert(in.lang.end(), lang.begin(), lang.end());
    }
    in.img_tokens = core::Tensor::uniform({2, cfg.img_tokens(), cfg.patch * cfg.patch * 3}, rng, 0, 1);
    in.proprio = core::Tensor::uniform({2, 3}, rng, 0, 1);

    int violations = 0;
    const auto& l = model.layout;
    attention_replay::visit_attention(model, in, [&](int, const core::Tensor& w) {
        int64_t b = w.dim(0), t = w.dim(2);
        for (int64_t bi = 0; bi < b; ++bi)
            for (int h = 0; h < cfg.heads; ++h)
                for (int i = l.action_ofs; i < l.total; ++i)
                    for (int j = i + 1; j < l.total; ++j)
                        if (w.data()[((bi * cfg.heads + h) * t + i) * t + j] != 0.0f) ++violations;
    });
    out.pass = violations == 0;
    out.detail = std::to_string(violations) + " nonzero later-slot weights across " + std::to_string(cfg.layers) +
                 " layers x " + std::to_string(cfg.heads) + " heads";
    return out;
}

Outcome criterion_4_codec(Artifacts&) {
    Outcome out;
    policy::ActionCodec codec;
    core::Rng rng(4);
    int violations = 0;
    for (int i = 0; i < 10000; ++i) {
        sim::Action a{{static_cast<float>(rng.uniform(-0.1, 0.1)), static_cast<float>(rng.uniform(-0.1, 0.1))},
                      static_cast<float>(rng.uniform(-1, 1))};
        sim::Action b = codec.dequantize(codec.quantize(a));
        if (std::abs(a.delta.x - b.delta.x) > codec.bin_width(0) / 2 + 1e-7f) ++violations;
        if (std::abs(a.delta.y - b.delta.y) > codec.bin_width(1) / 2 + 1e-7f) ++violations;
        if (std::abs(a.grip - b.grip) > codec.bin_width(2) / 2 + 1e-7f) ++violations;
    }
    out.pass = violations == 0;
    out.detail = std::to_string(violations) + " round-trip violations over 10000 actions";
    return out;
}

Outcome criterion_5_expert(Artifacts&) {
    Outcome out;
    sim::SceneConfig cfg = clean_scene();
    int wins = 0;
    for (uint64_t seed = 0; seed < 100; ++seed) {
        sim::ResetResult r = sim::reset(cfg, seed);
        sim::WorldState w = r.world;
        for (int s = 0; s < cfg.horizon; ++s) {
            sim::StepResult sr = sim::step(w, sim::expert_action(w, cfg), cfg);
            if (sr.done) {
                wins += sr.success ? 1 : 0;
                break;
            }
        }
    }
    out.pass = wins == 100;
    out.detail = std::to_string(wins) + "/100 clean scenes within horizon " + std::to_string(cfg.horizon);
    return out;
}

Outcome criterion_6_probe_protocol(Artifacts&) {
    Outcome out;
    std::ostringstream detail;

    core::Rng rng(6);
    probe::ProbeData d;
    d.tokens = 1;
    d.width = 6;
    for (int t = 0; t < 20; ++t)
        for (int s = 0; s < 4; ++s) {
            std::vector<float> f(6);
            for (auto& v : f) v = static_cast<float>(rng.normal());
            d.features.push_back(f);
            d.targets.push_back({static_cast<float>(t), f[0] + 0.5f * static_cast<float>(rng.normal())});
            d.traj_ids.push_back(t);
        }

    probe::ProbeConfig cfg;
    cfg.depth = 1;
    cfg.width = 16;
    cfg.heads = 2;
    cfg.ff_dim = 32;
    cfg.max_epochs = 60;
    cfg.patience = 10;
    cfg.lr = 3e-3;
    probe::FitResult r = fit_probe(d, cfg, 1, true, false);

    auto train_trajs = r.details["train_trajs"].get<std::vector<int>>();
    auto val_trajs = r.details["val_trajs"].get<std::vector<int>>();
    for (int t : train_trajs)
        for (int v : val_trajs)
            if (t == v) {
                out.pass = false;
                detail << "trajectory " << t << " in two splits; ";
            }

    // z-mean over train targets only: first target dim equals the traj id
    double want = 0;
    for (int t : train_trajs) want += t;
    want /= static_cast<double>(train_trajs.size());
    double got = r.details["z_mu"][0].get<double>();
    if (std::abs(got - want) > 1e-4) {
        out.pass = false;
        detail << "z-stats leak: train-mean " << want << " vs stored " << got << "; ";
    }

    // best-validation selection and the patience-10 stop
    auto curve = r.details["val_curve"].get<std::vector<double>>();
    double best = curve[static_cast<size_t>(r.best_epoch)];
    for (double v : curve)
        if (best > v + 1e-12) {
            out.pass = false;
            detail << "best epoch is not the argmin of the val curve; ";
            break;
        }
    if (std::abs(r.best_val_loss - best) > 1e-12) {
        out.pass = false;
        detail << "reported best val differs from the curve; ";
    }
    if (r.epochs_run - r.best_epoch - 1 > cfg.patience) {
        out.pass = false;
        detail << "ran " << r.epochs_run - r.best_epoch - 1 << " epochs past the best (patience " << cfg.patience << "); ";
    }
    if (r.epochs_run < cfg.max_epochs && r.epochs_run - r.best_epoch - 1 != cfg.patience) {
        out.pass = false;
        detail << "early stop fired before patience was exhausted; ";
    }

    // determinism of the full fit
    probe::FitResult r2 = fit_probe(d, cfg, 1, true, false);
    if (r2.test_loss != r.test_loss) {
        out.pass = false;
        detail << "same-seed refit changed the test loss; ";
    }

    if (out.pass)
        detail << "split hygiene, train-only z-stats, patience-" << cfg.patience << " stop at epoch " << r.epochs_run
               << " (best " << r.best_epoch << "), deterministic refit";
    out.detail = detail.str();
    return out;
}

Outcome criterion_7_findings(Artifacts& art) {
    Outcome out;
    probe::ProbeReport rep = art.probe_report();

    auto mean_of = [&](const std::string& task, const std::string& encoder) {
        for (const auto& e : rep.entries)
            if (e.task == task && e.encoder == encoder) return e.mean;
        throw std::runtime_error("probe report is missing " + task + "/" + encoder);
    };

    std::ostringstream table;
    table << "\n    raw probe losses (mean over " << kProbeSeeds.size() << " seeds):\n";
    for (const auto& task : probe::kProbeTasks) {
        table << "      " << task << ": ";
        for (const auto& enc_name : {"video_predictive", "aug_selfsup", "lang_contrastive"})
            table << enc_name << "=" << mean_of(task, enc_name) << " ";
        table << "\n";
    }
    std::printf("%s", table.str().c_str());

    std::ostringstream detail;
    auto require_less = [&](const std::string& task, bool video_lower) {
        double v = mean_of(task, "video_predictive");
        double a = mean_of(task, "aug_selfsup");
        double l = mean_of(task, "lang_contrastive");
        bool ok = video_lower ? (v < a && v < l) : (v > a && v > l);
        if (!ok) {
            out.pass = false;
            detail << task << " ordering violated (video=" << v << ", selfsup=" << a << ", lang=" << l << "); ";
        }
        return ok;
    };
    require_less("task_relevant", true);
    require_less("residual", true);
    require_less("light", false);
    require_less("background", false);
    if (out.pass)
        detail << "video_predictive lowest on task_relevant+residual and highest on light+background (strict ordering of "
                  "seed-means)";
    out.detail = detail.str();
    return out;
}

Outcome criterion_8_fusion(Artifacts& art) {
    Outcome out;
    auto suite_mean = [](const std::vector<policy::EvalRow>& rows, const std::string& dim) {
        double sum = 0;
        int n = 0;
        for (const auto& r : rows)
            if (r.dimension == dim) {
                sum += r.success_rate;
                ++n;
            }
        return n ? sum / n : 0.0;
    };

    double base_clean = 0, gated_clean = 0, base_pert = 0, gated_pert = 0;
    std::ostringstream table;
    table << "\n    success rates (clean | light | background):\n";
    for (uint64_t seed : kPolicySeeds) {
        auto base_rows = art.eval_rows(false, seed);
        auto gated_rows = art.eval_rows(true, seed);
        double bc = suite_mean(base_rows, "clean"), bl = suite_mean(base_rows, "light"),
               bb = suite_mean(base_rows, "background");
        double gc = suite_mean(gated_rows, "clean"), gl = suite_mean(gated_rows, "light"),
               gb = suite_mean(gated_rows, "background");
        table << "      seed " << seed << " baseline: " << bc << " | " << bl << " | " << bb << "\n";
        table << "      seed " << seed << " gated:    " << gc << " | " << gl << " | " << gb << "\n";
        base_clean += bc / static_cast<double>(kPolicySeeds.size());
        gated_clean += gc / static_cast<double>(kPolicySeeds.size());
        base_pert += (bl + bb) / 2.0 / static_cast<double>(kPolicySeeds.size());
        gated_pert += (gl + gb) / 2.0 / static_cast<double>(kPolicySeeds.size());
    }
    std::printf("%s", table.str().c_str());

    std::ostringstream detail;
    detail << "baseline clean=" << base_clean << ", gated clean=" << gated_clean << ", baseline light+bg=" << base_pert
           << ", gated light+bg=" << gated_pert;
    if (base_clean < 0.8) {
        out.pass = false;
        detail << "; baseline clean below 0.8";
    }
    if (gated_clean < base_clean) {
        out.pass = false;
        detail << "; gated clean fell below baseline";
    }
    if (!(gated_pert > base_pert)) {
        out.pass = false;
        detail << "; gated did not strictly exceed baseline on the light+background mean";
    }
    out.detail = detail.str();
    return out;
}

Outcome criterion_9_collapse(Artifacts& art) {
    Outcome out;
    std::ostringstream detail;
    sim::Dataset ds = art.probe_dataset();

    double total_pretrain = 0;
    for (auto family : {enc::EncoderFamily::VideoPredictive, enc::EncoderFamily::AugSelfsup,
                        enc::EncoderFamily::LangContrastive}) {
        enc::EncoderCheckpoint ck = art.encoder(family);
        enc::CollapseReport rep = enc::encoder_collapse_report(ck, ds);
        detail << enc::family_name(family) << " mean_std=" << rep.mean_std << " ";
        if (rep.flagged || rep.mean_std < 0.01f) {
            out.pass = false;
            detail << "(COLLAPSED) ";
        }
        if (art.meta.contains("pretrain_seconds") &&
            art.meta["pretrain_seconds"].contains(enc::family_name(family)))
            total_pretrain += art.meta["pretrain_seconds"][enc::family_name(family)].get<double>();
    }
    if (total_pretrain > 0) {
        detail << "| total pretraining " << static_cast<int>(total_pretrain) << "s";
        if (total_pretrain > 1800) {
            out.pass = false;
            detail << " (exceeds 30 min)";
        }
    }

    // EMA contract: exact convex combination
    {
        core::Rng rng(9);
        enc::ViTConfig vc;
        vc.depth = 1;
        enc::ViTBackbone online(vc, rng), target(vc, rng);
        std::vector<float> t_before = target.pos_spatial.values();
        std::vector<float> o_vals = online.pos_spatial.values();
        enc::ema_update(target, online, 0.996);
        for (size_t i = 0; i < t_before.size(); ++i) {
            float want = static_cast<float>(0.996 * t_before[i] + (1.0 - 0.996) * o_vals[i]);
            if (target.pos_spatial.values()[i] != want) {
                out.pass = false;
                detail << "| EMA not exact at element " << i;
                break;
            }
        }
    }
    // stop-gradient contract: detached branches accumulate nothing
    {
        core::Rng rng(10);
        core::Tensor x = core::Tensor::randn({4, 8}, rng).set_requires_grad();
        core::Tensor w = core::Tensor::randn({4, 8}, rng).set_requires_grad();
        core::backward(core::mean_all(core::cosine_similarity(w, x.detach())));
        if (x.has_grad()) {
            out.pass = false;
            detail << "| stop-gradient leaked into the detached branch";
        }
    }
    out.detail = detail.str();
    return out;
}

Outcome criterion_10_determinism(Artifacts&) {
    Outcome out;
    std::ostringstream detail;
    std::string base = fs::temp_directory_path() / "vlalab_acceptance_det";
    fs::remove_all(base);

    cli::ExperimentConfig cfg;
    cfg.sim_n_traj = 16;
    cfg.pretrain.steps = 20;
    cfg.pretrain.batch = 8;
    cfg.probe_cfg.depth = 1;
    cfg.probe_cfg.width = 16;
    cfg.probe_cfg.heads = 2;
    cfg.probe_cfg.ff_dim = 32;
    cfg.probe_cfg.max_epochs = 2;
    cfg.scene.light_enabled = true;
    cfg.scene.brightness = {0.5f, 1.5f};
    cfg.scene.tint_max = 0.2f;
    cfg.scene.background_enabled = true;
    cfg.policy_cfg.layers = 2;
    cfg.policy_cfg.width = 32;
    cfg.policy_cfg.heads = 2;
    cfg.policy_cfg.ff_dim = 64;
    cfg.policy_cfg.chunk = 4;
    cfg.policy_cfg.train_steps = 12;
    cfg.policy_cfg.batch = 4;
    cfg.eval_episodes = 3;
    cfg.eval_dims = {"light"};

    auto compare = [&](const std::string& what, const std::string& a, const std::string& b) {
        if (slurp(a) != slurp(b)) {
            out.pass = false;
            detail << what << " differs across identical re-runs; ";
        }
    };

    for (const char* run : {"a", "b"}) {
        std::string d = base + "/" + run;
        cli::cmd_simgen(cfg, 3, d + "/data");
        cli::cmd_pretrain("video_predictive", cfg, d + "/data/dataset.bin", 4, d + "/enc");
        cli::cmd_pretrain("aug_selfsup", cfg, d + "/data/dataset.bin", 4, d + "/enc2");
        cli::cmd_probe({d + "/enc/encoder.bin", d + "/enc2/encoder.bin"}, d + "/data/dataset.bin", cfg, d + "/probe");
        cli::cmd_train_policy(d + "/data/dataset.bin", "", cfg, 5, d + "/policy");
        cli::cmd_eval(d + "/policy/policy.bin", "", cfg, 6, d + "/eval", "baseline");
        cli::cmd_report(d + "/probe", {d + "/eval"}, d + "/report");
    }
    compare("dataset", base + "/a/data/dataset.bin", base + "/b/data/dataset.bin");
    compare("encoder checkpoint", base + "/a/enc/encoder.bin", base + "/b/enc/encoder.bin");
    compare("pretraining metrics", base + "/a/enc/metrics.jsonl", base + "/b/enc/metrics.jsonl");
    compare("probe report", base + "/a/probe/report.jsonl", base + "/b/probe/report.jsonl");
    compare("probe csv", base + "/a/probe/report.csv", base + "/b/probe/report.csv");
    compare("policy checkpoint", base + "/a/policy/policy.bin", base + "/b/policy/policy.bin");
    compare("success table", base + "/a/eval/success.csv", base + "/b/eval/success.csv");
    compare("consolidated report", base + "/a/report/report.md", base + "/b/report/report.md");
    compare("summary csv", base + "/a/report/success_summary.csv", base + "/b/report/success_summary.csv");
    fs::remove_all(base);
    if (out.pass) detail << "all dataset/checkpoint/report artifacts byte-identical across re-runs";
    out.detail = detail.str();
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    std::string which = "all";
    std::string artifacts_dir = "acceptance_artifacts";
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) which = argv[++i];
        if (std::strcmp(argv[i], "--artifacts") == 0 && i + 1 < argc) artifacts_dir = argv[++i];
    }

    std::vector<std::pair<std::string, CriterionFn>> criteria = {
        {"gradient correctness (finite differences, 64-bit, rel err <= 1e-4)", criterion_1_gradients},
        {"gate-zero equivalence (gated forward == baseline within 1e-6)", criterion_2_gate_zero},
        {"mask soundness (no attention to later action slots)", criterion_3_mask},
        {"codec contract (256-bin round trip within half a bin)", criterion_4_codec},
        {"expert oracle (100/100 clean scenes)", criterion_5_expert},
        {"probe-protocol fidelity (splits, z-stats, patience, best-val)", criterion_6_probe_protocol},
        {"directional findings reproduction (probe ordering)", criterion_7_findings},
        {"directional fusion benefit (clean >= baseline, light+background above)", criterion_8_fusion},
        {"non-collapse and EMA/stop-gradient contracts", criterion_9_collapse},
        {"determinism and persistence (byte-identical re-runs)", criterion_10_determinism},
    };

    Artifacts art(artifacts_dir);
    bool all_pass = true;
    for (size_t i = 0; i < criteria.size(); ++i) {
        int id = static_cast<int>(i) + 1;
        if (which != "all" && which != std::to_string(id)) continue;
        double t0 = now_sec();
        Outcome o;
        try {
            o = criteria[i].second(art);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        double dt = now_sec() - t0;
        std::printf("[%s] criterion %d: %s — %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                    o.detail.c_str(), dt);
        std::fflush(stdout);
        all_pass = all_pass && o.pass;
    }
    return all_pass ? 0 : 1;
}
