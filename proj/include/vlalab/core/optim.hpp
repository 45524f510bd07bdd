#pragma once

#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "vlalab/core/tensor.hpp"

namespace vlalab::core {

template <class S>
struct ParamGroupT {
    std::string name;
    std::vector<TensorT<S>> params;
    double learning_rate = 1e-4;
    double weight_decay = 0.0;
};

// AdamW with decoupled weight decay and per-group learning rates.
template <class S>
class AdamWT {
public:
    explicit AdamWT(std::vector<ParamGroupT<S>> groups, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : groups_(std::move(groups)), beta1_(beta1), beta2_(beta2), eps_(eps) {
        for (const auto& g : groups_) {
            if (g.learning_rate <= 0)
                throw std::invalid_argument("adamw: group '" + g.name + "' has non-positive learning rate");
            for (const auto& p : g.params) {
                auto* key = p.d.get();
                if (moments_.count(key))
                    throw std::invalid_argument("adamw: parameter '" + p.name() + "' appears in more than one group");
                moments_[key] = Moments{std::vector<S>(p.values().size(), S(0)), std::vector<S>(p.values().size(), S(0))};
            }
        }
    }

    // multiplies every group's learning rate for subsequent steps (warmup)
    void set_lr_scale(double s) { lr_scale_ = s; }

    void step() {
        ++t_;
        double bc1 = 1.0 - std::pow(beta1_, t_);
        double bc2 = 1.0 - std::pow(beta2_, t_);
        for (auto& g : groups_) {
            for (auto& p : g.params) {
                auto* key = p.d.get();
                if (!p.has_grad())
                    throw std::runtime_error("adamw: missing gradient for parameter '" +
                                             (p.name().empty() ? std::string("<unnamed>") : p.name()) + "' in group '" +
                                             g.name + "'");
                Moments& mo = moments_[key];
                std::vector<S>& val = p.values();
                const std::vector<S>& grad = p.grad();
                for (size_t i = 0; i < val.size(); ++i) {
                    double gi = grad[i];
                    double m = beta1_ * mo.m[i] + (1.0 - beta1_) * gi;
                    double v = beta2_ * mo.v[i] + (1.0 - beta2_) * gi * gi;
                    mo.m[i] = static_cast<S>(m);
                    mo.v[i] = static_cast<S>(v);
                    double update = (m / bc1) / (std::sqrt(v / bc2) + eps_);
                    double lr = g.learning_rate * lr_scale_;
                    val[i] = static_cast<S>(val[i] - lr * update - lr * g.weight_decay * val[i]);
                }
            }
        }
    }

    void zero_grad() {
        for (auto& g : groups_)
            for (auto& p : g.params) p.zero_grad();
    }

    int64_t step_count() const { return t_; }
    const std::vector<ParamGroupT<S>>& groups() const { return groups_; }

private:
    struct Moments {
        std::vector<S> m, v;
    };
    std::vector<ParamGroupT<S>> groups_;
    std::unordered_map<TensorData<S>*, Moments> moments_;
    double beta1_, beta2_, eps_;
    double lr_scale_ = 1.0;
    int64_t t_ = 0;
};

using ParamGroup = ParamGroupT<float>;
using AdamW = AdamWT<float>;

}  // namespace vlalab::core
