#include "vlalab/sim/dataset.hpp"

#include <fstream>
#include <stdexcept>

#include "vlalab/core/serialize.hpp"

namespace vlalab::sim {

using core::io::read_bytes;
using core::io::read_f32;
using core::io::read_f32_span;
using core::io::read_u32;
using core::io::read_u64;
using core::io::write_bytes;
using core::io::write_f32;
using core::io::write_f32_span;
using core::io::write_u32;
using core::io::write_u64;

namespace {

constexpr char kDatasetMagic[16] = {'V', 'L', 'A', 'L', 'A', 'B', '.', 'D', 'A', 'T', 'A', '.', 'v', '1', 0, 0};

std::vector<float> encode_nuisance(const NuisanceState& n) {
    return {n.brightness,
            n.tint[0],
            n.tint[1],
            n.tint[2],
            static_cast<float>(n.bg.pattern),
            n.bg.phase,
            n.bg.c0[0],
            n.bg.c0[1],
            n.bg.c0[2],
            n.bg.c1[0],
            n.bg.c1[1],
            n.bg.c1[2],
            n.cam_dx,
            n.cam_dy,
            n.noise_sigma};
}

NuisanceState decode_nuisance(const std::vector<float>& v) {
    NuisanceState n;
    n.brightness = v[0];
    n.tint = {v[1], v[2], v[3]};
    n.bg.pattern = static_cast<int>(v[4]);
    n.bg.phase = v[5];
    n.bg.c0 = {v[6], v[7], v[8]};
    n.bg.c1 = {v[9], v[10], v[11]};
    n.cam_dx = v[12];
    n.cam_dy = v[13];
    n.noise_sigma = v[14];
    return n;
}

constexpr int kNuisanceDim = 15;

}  // namespace

int state_dim(int object_count) { return 8 + 4 * object_count; }

std::vector<float> encode_state(const WorldState& w) {
    std::vector<float> v;
    v.reserve(static_cast<size_t>(state_dim(static_cast<int>(w.objects.size()))));
    v.push_back(w.gripper.x);
    v.push_back(w.gripper.y);
    v.push_back(w.holding ? static_cast<float>(*w.holding) : -1.f);
    v.push_back(static_cast<float>(w.target_object));
    v.push_back(w.goal_center.x);
    v.push_back(w.goal_center.y);
    v.push_back(w.goal_radius);
    v.push_back(static_cast<float>(w.step_index));
    for (const auto& o : w.objects) {
        v.push_back(o.pos.x);
        v.push_back(o.pos.y);
        v.push_back(static_cast<float>(o.color));
        v.push_back(static_cast<float>(o.shape));
    }
    return v;
}

WorldState decode_state(const std::vector<float>& v, int object_count) {
    if (static_cast<int>(v.size()) != state_dim(object_count))
        throw std::invalid_argument("decode_state: vector length " + std::to_string(v.size()) + " for " +
                                    std::to_string(object_count) + " objects");
    WorldState w;
    w.gripper = {v[0], v[1]};
    if (v[2] >= 0.f) w.holding = static_cast<int>(v[2]);
    w.target_object = static_cast<int>(v[3]);
    w.goal_center = {v[4], v[5]};
    w.goal_radius = v[6];
    w.step_index = static_cast<int>(v[7]);
    for (int i = 0; i < object_count; ++i) {
        ObjectState o;
        o.id = i;
        o.pos = {v[8 + 4 * i], v[9 + 4 * i]};
        o.color = static_cast<int>(v[10 + 4 * i]);
        o.shape = static_cast<int>(v[11 + 4 * i]);
        w.objects.push_back(o);
    }
    return w;
}

std::vector<float> task_relevant_vector(const WorldState& w) {
    std::vector<float> v;
    v.reserve(2 + 2 * w.objects.size());
    v.push_back(w.gripper.x);
    v.push_back(w.gripper.y);
    for (const auto& o : w.objects) {
        v.push_back(o.pos.x);
        v.push_back(o.pos.y);
    }
    return v;
}

std::string Dataset::id() const {
    json j;
    to_json(j, config);
    j["seed"] = seed;
    j["n_traj"] = trajectories.size();
    return core::hash_hex(j.dump());
}

Dataset collect_dataset(int n_traj, const SceneConfig& config, uint64_t seed) {
    if (n_traj < 1) throw std::invalid_argument("collect_dataset: n_traj must be >= 1, got " + std::to_string(n_traj));
    Dataset ds;
    ds.config = config;
    ds.seed = seed;
    ds.trajectories.reserve(static_cast<size_t>(n_traj));
    for (int t = 0; t < n_traj; ++t) {
        Trajectory traj;
        traj.traj_seed = core::mix_seed(seed, static_cast<uint64_t>(t));
        ResetResult r = reset(config, traj.traj_seed);
        traj.instruction = r.instruction;
        traj.nuisance = r.nuisance;
        WorldState world = r.world;
        for (int s = 0; s < config.horizon; ++s) {
            StepRecord rec;
            rec.state = world;
            rec.frame = render(world, traj.nuisance, config.resolution, frame_noise_seed(traj.traj_seed, world.step_index));
            rec.action = expert_action(world, config);
            StepResult sr = step(world, rec.action, config);
            traj.steps.push_back(std::move(rec));
            if (sr.done) {
                traj.success = sr.success;
                break;
            }
        }
        traj.final_state = world;
        ds.trajectories.push_back(std::move(traj));
    }
    return ds;
}

void save_dataset(const std::string& path, const Dataset& ds) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_dataset: cannot open '" + path + "' for writing");
    write_bytes(os, kDatasetMagic, 16);
    json manifest;
    json cfg;
    to_json(cfg, ds.config);
    manifest["config"] = cfg;
    manifest["seed"] = ds.seed;
    manifest["n_traj"] = ds.trajectories.size();
    manifest["resolution"] = ds.config.resolution;
    manifest["object_count"] = ds.config.object_count;
    manifest["state_dim"] = state_dim(ds.config.object_count);
    manifest["version"] = 1;
    std::string ms = manifest.dump();
    write_u64(os, ms.size());
    write_bytes(os, ms.data(), ms.size());

    int sdim = state_dim(ds.config.object_count);
    int64_t frame_len = static_cast<int64_t>(ds.config.resolution) * ds.config.resolution * 3;
    for (const auto& traj : ds.trajectories) {
        write_u64(os, traj.traj_seed);
        write_u32(os, static_cast<uint32_t>(traj.instruction.size()));
        for (int t : traj.instruction) write_u32(os, static_cast<uint32_t>(t));
        write_u32(os, traj.success ? 1u : 0u);
        std::vector<float> nu = encode_nuisance(traj.nuisance);
        write_f32_span(os, nu.data(), nu.size());
        write_u32(os, static_cast<uint32_t>(traj.steps.size()));
        for (const auto& st : traj.steps) {
            std::vector<float> sv = encode_state(st.state);
            if (static_cast<int>(sv.size()) != sdim) throw std::runtime_error("save_dataset: state width drift");
            write_f32_span(os, sv.data(), sv.size());
            if (static_cast<int64_t>(st.frame.size()) != frame_len) throw std::runtime_error("save_dataset: frame size drift");
            write_f32_span(os, st.frame.data(), st.frame.size());
            write_f32(os, st.action.delta.x);
            write_f32(os, st.action.delta.y);
            write_f32(os, st.action.grip);
        }
        std::vector<float> fs = encode_state(traj.final_state);
        write_f32_span(os, fs.data(), fs.size());
    }
    if (!os) throw std::runtime_error("save_dataset: write failed for '" + path + "'");
}

Dataset load_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_dataset: cannot open '" + path + "'");
    char magic[16];
    read_bytes(is, magic, 16);
    if (std::memcmp(magic, kDatasetMagic, 16) != 0)
        throw std::runtime_error("load_dataset: '" + path + "' is not a dataset file (bad magic)");
    uint64_t mlen = read_u64(is);
    std::string ms(mlen, '\0');
    read_bytes(is, ms.data(), mlen);
    json manifest = json::parse(ms);

    Dataset ds;
    from_json(manifest.at("config"), ds.config);
    ds.seed = manifest.at("seed");
    uint64_t n_traj = manifest.at("n_traj");
    int sdim = manifest.at("state_dim");
    int k = manifest.at("object_count");
    int64_t frame_len = static_cast<int64_t>(ds.config.resolution) * ds.config.resolution * 3;

    for (uint64_t t = 0; t < n_traj; ++t) {
        Trajectory traj;
        traj.traj_seed = read_u64(is);
        uint32_t ilen = read_u32(is);
        traj.instruction.resize(ilen);
        for (auto& tok : traj.instruction) tok = static_cast<int>(read_u32(is));
        traj.success = read_u32(is) != 0;
        std::vector<float> nu(kNuisanceDim);
        read_f32_span(is, nu.data(), nu.size());
        traj.nuisance = decode_nuisance(nu);
        uint32_t n_steps = read_u32(is);
        traj.steps.resize(n_steps);
        for (auto& st : traj.steps) {
            std::vector<float> sv(static_cast<size_t>(sdim));
            read_f32_span(is, sv.data(), sv.size());
            st.state = decode_state(sv, k);
            st.frame.resize(static_cast<size_t>(frame_len));
            read_f32_span(is, st.frame.data(), st.frame.size());
            st.action.delta.x = read_f32(is);
            st.action.delta.y = read_f32(is);
            st.action.grip = read_f32(is);
        }
        std::vector<float> fs(static_cast<size_t>(sdim));
        read_f32_span(is, fs.data(), fs.size());
        traj.final_state = decode_state(fs, k);
        ds.trajectories.push_back(std::move(traj));
    }
    return ds;
}

}  // namespace vlalab::sim
