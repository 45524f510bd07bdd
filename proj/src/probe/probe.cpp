#include "vlalab/probe/probe.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "vlalab/core/optim.hpp"

namespace vlalab::probe {

using namespace core;

namespace {

struct ProbeModel {
    ProbeConfig cfg;
    Linear in_proj;
    Tensor cls;
    Tensor pos;
    std::vector<TransformerBlock> blocks;
    LayerNormL ln;
    Linear head;

    ProbeModel(int feat_width, int tokens, int target_dim, const ProbeConfig& c, Rng& rng)
        : cfg(c), in_proj(feat_width, c.width, rng) {
        cls = Tensor::randn({c.width}, rng, 0.02).set_requires_grad().set_name("probe.cls");
        pos = Tensor::randn({tokens + 1, c.width}, rng, 0.02).set_requires_grad().set_name("probe.pos");
        for (int i = 0; i < c.depth; ++i) blocks.emplace_back(c.width, c.heads, c.ff_dim, rng, c.dropout);
        ln = LayerNormL(c.width);
        head = Linear(c.width, target_dim, rng);
    }

    // x: [B, tokens, feat_width] -> [B, target_dim]
    Tensor forward(const Tensor& x, bool train, Rng& rng) const {
        Tensor h = in_proj.forward(x);
        Tensor cls_row = add(Tensor::zeros({x.dim(0), 1, cfg.width}), cls);
        h = concat<float>({cls_row, h}, 1);
        h = add(h, pos);
        for (const auto& blk : blocks) h = blk.forward(h, nullptr, train, rng);
        Tensor first = reshape(slice(h, 1, 0, 1), {x.dim(0), cfg.width});
        return head.forward(ln.forward(first));
    }

    ParamList params() const {
        ParamList ps;
        in_proj.collect(ps, "probe.in_proj");
        ps.add("probe.cls", cls);
        ps.add("probe.pos", pos);
        for (size_t i = 0; i < blocks.size(); ++i) blocks[i].collect(ps, "probe.block" + std::to_string(i));
        ln.collect(ps, "probe.ln");
        head.collect(ps, "probe.head");
        return ps;
    }
};

Tensor batch_features(const ProbeData& data, const std::vector<size_t>& idx, size_t ofs, size_t count) {
    Tensor x = Tensor::zeros({static_cast<int64_t>(count), data.tokens, data.width});
    for (size_t i = 0; i < count; ++i)
        std::copy(data.features[idx[ofs + i]].begin(), data.features[idx[ofs + i]].end(),
                  x.data() + i * static_cast<size_t>(data.tokens) * data.width);
    return x;
}

Tensor batch_targets(const std::vector<std::vector<float>>& targets, const std::vector<size_t>& idx, size_t ofs,
                     size_t count) {
    int64_t d = static_cast<int64_t>(targets[0].size());
    Tensor y = Tensor::zeros({static_cast<int64_t>(count), d});
    for (size_t i = 0; i < count; ++i)
        std::copy(targets[idx[ofs + i]].begin(), targets[idx[ofs + i]].end(), y.data() + i * d);
    return y;
}

}  // namespace

FitResult fit_probe(const ProbeData& data, const ProbeConfig& config, uint64_t seed, bool normalize_targets,
                    bool use_mae) {
    if (data.features.size() != data.targets.size() || data.features.size() != data.traj_ids.size())
        throw std::invalid_argument("fit_probe: features/targets/traj_ids lengths differ");
    if (data.size() == 0) throw std::invalid_argument("fit_probe: empty data");

    std::vector<int> trajs(data.traj_ids);
    std::sort(trajs.begin(), trajs.end());
    trajs.erase(std::unique(trajs.begin(), trajs.end()), trajs.end());
    if (trajs.size() < 10)
        throw std::invalid_argument("fit_probe: split degenerate with " + std::to_string(trajs.size()) +
                                    " trajectories (need >= 10)");

    Rng rng(mix_seed(seed, 0x9b0b3ull));
    rng.shuffle(trajs);
    size_t n_train = static_cast<size_t>(std::llround(config.split_train * static_cast<double>(trajs.size())));
    size_t n_val = static_cast<size_t>(std::llround(config.split_val * static_cast<double>(trajs.size())));
    n_train = std::max<size_t>(1, std::min(n_train, trajs.size() - 2));
    n_val = std::max<size_t>(1, std::min(n_val, trajs.size() - n_train - 1));
    std::set<int> train_set(trajs.begin(), trajs.begin() + static_cast<int64_t>(n_train));
    std::set<int> val_set(trajs.begin() + static_cast<int64_t>(n_train),
                          trajs.begin() + static_cast<int64_t>(n_train + n_val));

    std::vector<size_t> train_idx, val_idx, test_idx;
    for (size_t i = 0; i < data.size(); ++i) {
        if (train_set.count(data.traj_ids[i]))
            train_idx.push_back(i);
        else if (val_set.count(data.traj_ids[i]))
            val_idx.push_back(i);
        else
            test_idx.push_back(i);
    }

    // z-stats from the train split only
    int d = data.target_dim();
    std::vector<float> mu(static_cast<size_t>(d), 0.f), sigma(static_cast<size_t>(d), 1.f);
    std::vector<std::vector<float>> targets = data.targets;
    if (normalize_targets) {
        std::vector<double> m(static_cast<size_t>(d), 0), m2(static_cast<size_t>(d), 0);
        for (size_t i : train_idx)
            for (int j = 0; j < d; ++j) {
                m[static_cast<size_t>(j)] += data.targets[i][static_cast<size_t>(j)];
                m2[static_cast<size_t>(j)] +=
                    static_cast<double>(data.targets[i][static_cast<size_t>(j)]) * data.targets[i][static_cast<size_t>(j)];
            }
        for (int j = 0; j < d; ++j) {
            size_t uj = static_cast<size_t>(j);
            m[uj] /= static_cast<double>(train_idx.size());
            double var = m2[uj] / static_cast<double>(train_idx.size()) - m[uj] * m[uj];
            mu[uj] = static_cast<float>(m[uj]);
            sigma[uj] = static_cast<float>(std::sqrt(std::max(var, 0.0)));
            if (sigma[uj] < 1e-6f) sigma[uj] = 1.f;  // constant targets
        }
        for (auto& t : targets)
            for (int j = 0; j < d; ++j) t[static_cast<size_t>(j)] = (t[static_cast<size_t>(j)] - mu[static_cast<size_t>(j)]) / sigma[static_cast<size_t>(j)];
    }

    ProbeModel model(data.width, data.tokens, d, config, rng);
    ParamList params = model.params();
    for (auto& [name, t] : params.items) t.set_name(name);
    AdamW opt({ParamGroup{"probe", params.tensors(), config.lr, config.weight_decay}});

    auto eval_split = [&](const std::vector<size_t>& idx) {
        double total = 0;
        size_t count = 0;
        Rng no_drop(0);
        for (size_t ofs = 0; ofs < idx.size(); ofs += static_cast<size_t>(config.batch)) {
            size_t n = std::min<size_t>(static_cast<size_t>(config.batch), idx.size() - ofs);
            Tensor pred = model.forward(batch_features(data, idx, ofs, n), false, no_drop);
            Tensor y = batch_targets(targets, idx, ofs, n);
            Tensor loss = use_mae ? l1_loss(pred, y) : mse_loss(pred, y);
            total += static_cast<double>(loss.item()) * static_cast<double>(n);
            count += n;
        }
        return total / static_cast<double>(count);
    };

    double best_val = std::numeric_limits<double>::infinity();
    int best_epoch = -1;
    int epochs_without_improvement = 0;
    std::vector<std::vector<float>> best_weights;
    json val_curve = json::array();
    int epoch = 0;
    for (; epoch < config.max_epochs; ++epoch) {
        std::vector<size_t> order = train_idx;
        rng.shuffle(order);
        for (size_t ofs = 0; ofs < order.size(); ofs += static_cast<size_t>(config.batch)) {
            size_t n = std::min<size_t>(static_cast<size_t>(config.batch), order.size() - ofs);
            Tensor pred = model.forward(batch_features(data, order, ofs, n), true, rng);
            Tensor y = batch_targets(targets, order, ofs, n);
            Tensor loss = use_mae ? l1_loss(pred, y) : mse_loss(pred, y);
            backward(loss);
            opt.step();
            opt.zero_grad();
        }
        double val = eval_split(val_idx);
        val_curve.push_back(val);
        if (val < best_val) {
            best_val = val;
            best_epoch = epoch;
            epochs_without_improvement = 0;
            best_weights.clear();
            for (auto& [name, t] : params.items) best_weights.push_back(t.values());
        } else {
            ++epochs_without_improvement;
            if (epochs_without_improvement >= config.patience) {
                ++epoch;
                break;
            }
        }
    }

    // restore the best-validation checkpoint before the test pass
    for (size_t i = 0; i < params.items.size(); ++i) params.items[i].second.values() = best_weights[i];

    FitResult out;
    out.test_loss = eval_split(test_idx);
    out.best_val_loss = best_val;
    out.best_epoch = best_epoch;
    out.epochs_run = epoch;
    out.details["val_curve"] = val_curve;
    out.details["n_train"] = train_idx.size();
    out.details["n_val"] = val_idx.size();
    out.details["n_test"] = test_idx.size();
    out.details["train_trajs"] = std::vector<int>(train_set.begin(), train_set.end());
    out.details["val_trajs"] = std::vector<int>(val_set.begin(), val_set.end());
    if (normalize_targets) {
        out.details["z_mu"] = mu;
        out.details["z_sigma"] = sigma;
    }
    return out;
}

}  // namespace vlalab::probe
