#pragma once

#include <string>
#include <vector>

#include "vlalab/sim/world.hpp"

namespace vlalab::sim {

// LIBERO-plus-style evaluation axes.
enum class PerturbDim { Camera, Light, Background, Noise, Layout, Language };

PerturbDim parse_perturb_dim(const std::string& name);
std::string perturb_dim_name(PerturbDim d);
const std::vector<PerturbDim>& all_perturb_dims();

struct SuiteEntry {
    std::string label;
    SceneConfig config;
};

// >= 5 configs that vary only the requested dimension, pushed beyond the base
// config's training ranges.
std::vector<SuiteEntry> perturbation_suite(const SceneConfig& base, PerturbDim dimension);

}  // namespace vlalab::sim
