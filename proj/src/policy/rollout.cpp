#include "vlalab/policy/rollout.hpp"

#include <fstream>
#include <sstream>

#include "vlalab/enc/vit.hpp"

namespace vlalab::policy {

using namespace core;

LearnedPlanner::LearnedPlanner(const PolicyCheckpoint& ck, const enc::EncoderCheckpoint* encoder)
    : ck(ck), encoder(encoder) {
    if (ck.config.fusion != FusionMode::None && encoder == nullptr)
        throw std::invalid_argument("rollout: policy was trained with fusion and needs its encoder");
}

std::vector<sim::Action> LearnedPlanner::plan(const sim::Env& env, const std::vector<float>& frame_prev,
                                              const std::vector<float>& frame_cur) {
    const PolicyConfig& cfg = ck.config;
    PolicyInputs in;
    in.batch = 1;
    in.lang = prepare_instruction(env.instruction, cfg.instr_len);
    enc::PatchTokens pt = enc::patchify(frame_cur, 1, cfg.resolution, cfg.resolution, cfg.patch, 1);
    in.img_tokens = Tensor::from({1, pt.n, pt.dim}, std::move(pt.tokens));
    in.proprio = Tensor::from({1, 3}, {env.world.gripper.x, env.world.gripper.y, env.world.holding ? 1.f : 0.f});
    if (cfg.fusion != FusionMode::None) {
        Tensor f = enc::encode(*encoder, frame_prev, frame_cur);
        in.features = reshape(f, {1, f.dim(0), f.dim(1)});
    }

    Rng no_drop(0);
    Tensor out = ck.model.forward_actions(in, false, no_drop);

    std::vector<sim::Action> chunk;
    chunk.reserve(static_cast<size_t>(cfg.chunk));
    if (cfg.action_mode == ActionMode::ContinuousChunk) {
        for (int i = 0; i < cfg.chunk; ++i) {
            chunk.push_back(ck.codec.from_unit(out.data() + static_cast<size_t>(i) * 3));
        }
    } else {
        // argmax per slot, slots grouped (chunk step, action dim)
        for (int i = 0; i < cfg.chunk; ++i) {
            std::array<int, ActionCodec::kDims> toks{};
            for (int d = 0; d < ActionCodec::kDims; ++d) {
                const float* row = out.data() + (static_cast<size_t>(i) * ActionCodec::kDims + d) * ActionCodec::kBins;
                int best = 0;
                for (int k = 1; k < ActionCodec::kBins; ++k)
                    if (row[k] > row[best]) best = k;
                toks[static_cast<size_t>(d)] = best;
            }
            chunk.push_back(ck.codec.dequantize(toks));
        }
    }
    return chunk;
}

std::vector<sim::Action> ExpertPlanner::plan(const sim::Env& env, const std::vector<float>&, const std::vector<float>&) {
    sim::WorldState world = env.world;
    std::vector<sim::Action> out;
    out.reserve(static_cast<size_t>(chunk));
    for (int i = 0; i < chunk; ++i) {
        sim::Action a = sim::expert_action(world, env.config);
        sim::step(world, a, env.config);
        out.push_back(a);
    }
    return out;
}

std::vector<sim::Action> RandomPlanner::plan(const sim::Env& env, const std::vector<float>&, const std::vector<float>&) {
    Rng rng(mix_seed(env.traj_seed, salt, static_cast<uint64_t>(env.world.step_index)));
    std::vector<sim::Action> out;
    for (int i = 0; i < chunk; ++i) {
        sim::Action a;
        a.delta = {static_cast<float>(rng.uniform(-0.1, 0.1)), static_cast<float>(rng.uniform(-0.1, 0.1))};
        a.grip = static_cast<float>(rng.uniform(-1.0, 1.0));
        out.push_back(a);
    }
    return out;
}

namespace {

sim::Action lerp_action(const sim::Action& a, const sim::Action& b, float t) {
    sim::Action out;
    out.delta = {a.delta.x + (b.delta.x - a.delta.x) * t, a.delta.y + (b.delta.y - a.delta.y) * t};
    out.grip = a.grip + (b.grip - a.grip) * t;
    return out;
}

bool run_episode(Planner& planner, sim::Env& env, int execute_m) {
    std::vector<float> frame_cur = env.observe();
    std::vector<float> frame_prev = frame_cur;
    auto step_once = [&](const sim::Action& a) {
        env.step_env(a);
        frame_prev = std::move(frame_cur);
        frame_cur = env.observe();
    };
    while (!env.done) {
        std::vector<sim::Action> chunk = planner.plan(env, frame_prev, frame_cur);
        if (chunk.empty()) throw std::runtime_error("rollout: planner returned an empty chunk");
        int m = execute_m < 0 ? static_cast<int>(chunk.size()) : std::min<int>(execute_m, static_cast<int>(chunk.size()));
        sim::Action prev = chunk[0];
        for (int i = 0; i < m && !env.done; ++i) {
            sim::Action mid = lerp_action(prev, chunk[static_cast<size_t>(i)], 0.5f);
            step_once({{mid.delta.x * 0.5f, mid.delta.y * 0.5f}, mid.grip});
            if (env.done) break;
            const sim::Action& full = chunk[static_cast<size_t>(i)];
            step_once({{full.delta.x * 0.5f, full.delta.y * 0.5f}, full.grip});
            prev = full;
        }
    }
    return env.success;
}

}  // namespace

std::vector<EvalRow> rollout_eval(Planner& planner, const std::vector<LabeledConfig>& configs, int n_episodes,
                                  uint64_t seed, const std::string& variant, int execute_m) {
    std::vector<EvalRow> rows;
    for (size_t c = 0; c < configs.size(); ++c) {
        int wins = 0;
        for (int ep = 0; ep < n_episodes; ++ep) {
            sim::Env env(configs[c].config);
            env.reset_env(mix_seed(seed, c, static_cast<uint64_t>(ep)));
            if (run_episode(planner, env, execute_m)) ++wins;
        }
        EvalRow row;
        row.dimension = configs[c].dimension;
        row.label = configs[c].label;
        row.variant = variant;
        row.success_rate = static_cast<double>(wins) / static_cast<double>(n_episodes);
        row.episodes = n_episodes;
        row.seed = seed;
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_eval_csv(const std::string& path, const std::vector<EvalRow>& rows) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_eval_csv: cannot open '" + path + "'");
    os << "dimension,config,variant,success_rate,episodes,seed\n";
    for (const auto& r : rows)
        os << r.dimension << "," << r.label << "," << r.variant << "," << r.success_rate << "," << r.episodes << ","
           << r.seed << "\n";
}

std::vector<EvalRow> read_eval_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("read_eval_csv: cannot open '" + path + "'");
    std::string line;
    std::getline(is, line);  // header
    std::vector<EvalRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        EvalRow r;
        std::string field;
        std::getline(ss, r.dimension, ',');
        std::getline(ss, r.label, ',');
        std::getline(ss, r.variant, ',');
        std::getline(ss, field, ',');
        r.success_rate = std::stod(field);
        std::getline(ss, field, ',');
        r.episodes = std::stoi(field);
        std::getline(ss, field, ',');
        r.seed = std::stoull(field);
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace vlalab::policy
