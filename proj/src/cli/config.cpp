#include "vlalab/cli/config.hpp"

#include <fstream>

#include "vlalab/core/serialize.hpp"

namespace vlalab::cli {

namespace {

json vit_to_json(const enc::ViTConfig& v) {
    return json{{"patch", v.patch},           {"width", v.width},   {"depth", v.depth},
                {"heads", v.heads},           {"ff_dim", v.ff_dim}, {"resolution", v.resolution},
                {"context_frames", v.context_frames}};
}

void vit_from_json(const json& j, enc::ViTConfig& v) {
    v.patch = j.at("patch");
    v.width = j.at("width");
    v.depth = j.at("depth");
    v.heads = j.at("heads");
    v.ff_dim = j.at("ff_dim");
    v.resolution = j.at("resolution");
    v.context_frames = j.at("context_frames");
}

json pretrain_to_json(const enc::PretrainConfig& p) {
    return json{{"batch", p.batch},
                {"steps", p.steps},
                {"lr", p.lr},
                {"weight_decay", p.weight_decay},
                {"mask_ratio", p.mask_ratio},
                {"ema_tau", p.ema_tau},
                {"predictor_depth", p.predictor_depth},
                {"crop_min_area", p.crop_min_area},
                {"brightness_jitter", p.brightness_jitter},
                {"tint_jitter", p.tint_jitter},
                {"embed_dim", p.embed_dim},
                {"log_every", p.log_every}};
}

void pretrain_from_json(const json& j, enc::PretrainConfig& p) {
    p.batch = j.at("batch");
    p.steps = j.at("steps");
    p.lr = j.at("lr");
    p.weight_decay = j.at("weight_decay");
    p.mask_ratio = j.at("mask_ratio");
    p.ema_tau = j.at("ema_tau");
    p.predictor_depth = j.at("predictor_depth");
    p.crop_min_area = j.at("crop_min_area");
    p.brightness_jitter = j.at("brightness_jitter");
    p.tint_jitter = j.at("tint_jitter");
    p.embed_dim = j.at("embed_dim");
    p.log_every = j.at("log_every");
}

json probe_to_json(const probe::ProbeConfig& p) {
    return json{{"depth", p.depth},           {"width", p.width},
                {"heads", p.heads},           {"ff_dim", p.ff_dim},
                {"dropout", p.dropout},       {"lr", p.lr},
                {"weight_decay", p.weight_decay}, {"batch", p.batch},
                {"max_epochs", p.max_epochs}, {"patience", p.patience},
                {"step_stride", p.step_stride}};
}

void probe_from_json(const json& j, probe::ProbeConfig& p) {
    p.depth = j.at("depth");
    p.width = j.at("width");
    p.heads = j.at("heads");
    p.ff_dim = j.at("ff_dim");
    p.dropout = j.at("dropout");
    p.lr = j.at("lr");
    p.weight_decay = j.at("weight_decay");
    p.batch = j.at("batch");
    p.max_epochs = j.at("max_epochs");
    p.patience = j.at("patience");
    p.step_stride = j.at("step_stride");
}

void check_unknown_keys(const json& given, const json& schema, const std::string& prefix) {
    for (auto& [key, val] : given.items()) {
        if (!schema.contains(key))
            throw std::invalid_argument("config: unknown key '" + (prefix.empty() ? key : prefix + "." + key) + "'");
        if (val.is_object() && schema.at(key).is_object())
            check_unknown_keys(val, schema.at(key), prefix.empty() ? key : prefix + "." + key);
    }
}

}  // namespace

json ExperimentConfig::to_json() const {
    json j;
    json s;
    sim::to_json(s, scene);
    s["n_traj"] = sim_n_traj;
    j["sim"] = s;
    j["encoder"] = json{{"vit", vit_to_json(vit)}, {"pretrain", pretrain_to_json(pretrain)}};
    json p = probe_to_json(probe_cfg);
    p["seeds"] = probe_seeds;
    j["probe"] = p;
    json pol;
    policy::to_json(pol, policy_cfg);
    j["policy"] = pol;
    j["eval"] = json{{"episodes", eval_episodes}, {"dims", eval_dims}};
    return j;
}

ExperimentConfig ExperimentConfig::parse(const json& j) {
    ExperimentConfig def;  // defaults
    check_unknown_keys(j, def.to_json(), "");

    ExperimentConfig out;
    // recursive merge onto defaults so sparse configs stay valid
    json merged = def.to_json();
    merged.merge_patch(j);

    sim::from_json(merged.at("sim"), out.scene);
    out.sim_n_traj = merged.at("sim").at("n_traj");
    vit_from_json(merged.at("encoder").at("vit"), out.vit);
    pretrain_from_json(merged.at("encoder").at("pretrain"), out.pretrain);
    probe_from_json(merged.at("probe"), out.probe_cfg);
    out.probe_seeds = merged.at("probe").at("seeds").get<std::vector<uint64_t>>();
    policy::from_json(merged.at("policy"), out.policy_cfg);
    out.eval_episodes = merged.at("eval").at("episodes");
    out.eval_dims = merged.at("eval").at("dims").get<std::vector<std::string>>();
    return out;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("config: cannot open '" + path + "'");
    json j;
    try {
        is >> j;
    } catch (const json::parse_error& e) {
        throw std::runtime_error("config: '" + path + "' is not valid JSON: " + e.what());
    }
    return parse(j);
}

void ExperimentConfig::apply_preset(const std::string& name) {
    if (name == "desk") return;  // the defaults
    if (name == "paper") {
        probe_cfg = probe::ProbeConfig::paper();
        policy_cfg.gated_interval = 8;
        return;
    }
    throw std::invalid_argument("config: unknown preset '" + name + "' (expected desk|paper)");
}

std::string ExperimentConfig::hash() const { return core::hash_hex(to_json().dump()); }

}  // namespace vlalab::cli
