#include "vlalab/sim/perturb.hpp"

#include <stdexcept>

namespace vlalab::sim {

PerturbDim parse_perturb_dim(const std::string& name) {
    if (name == "camera") return PerturbDim::Camera;
    if (name == "light") return PerturbDim::Light;
    if (name == "background") return PerturbDim::Background;
    if (name == "noise") return PerturbDim::Noise;
    if (name == "layout") return PerturbDim::Layout;
    if (name == "language") return PerturbDim::Language;
    throw std::invalid_argument("unknown perturbation dimension '" + name +
                                "' (expected camera|light|background|noise|layout|language)");
}

std::string perturb_dim_name(PerturbDim d) {
    switch (d) {
        case PerturbDim::Camera: return "camera";
        case PerturbDim::Light: return "light";
        case PerturbDim::Background: return "background";
        case PerturbDim::Noise: return "noise";
        case PerturbDim::Layout: return "layout";
        default: return "language";
    }
}

const std::vector<PerturbDim>& all_perturb_dims() {
    static const std::vector<PerturbDim> dims = {PerturbDim::Camera, PerturbDim::Light,  PerturbDim::Background,
                                                 PerturbDim::Noise,  PerturbDim::Layout, PerturbDim::Language};
    return dims;
}

std::vector<SuiteEntry> perturbation_suite(const SceneConfig& base, PerturbDim dim) {
    std::vector<SuiteEntry> out;
    auto push = [&](const std::string& label, SceneConfig cfg) { out.push_back({label, std::move(cfg)}); };

    switch (dim) {
        case PerturbDim::Light: {
            for (float b : {0.5f, 0.7f, 1.3f, 1.5f}) {
                SceneConfig c = base;
                c.light_enabled = true;
                c.brightness = {b, b};
                c.tint_max = 0.f;
                push("brightness_" + std::to_string(b).substr(0, 3), c);
            }
            SceneConfig c = base;
            c.light_enabled = true;
            c.brightness = {1.f, 1.f};
            c.tint_max = 0.18f;
            push("tint_0.18", c);
            break;
        }
        case PerturbDim::Background: {
            const std::pair<int, int> combos[] = {{0, 0}, {1, 1}, {2, 2}, {0, 3}, {1, 0}, {2, 1}};
            for (auto [pattern, palette] : combos) {
                SceneConfig c = base;
                c.background_enabled = true;
                c.bg_palette_set = 1;  // held-out palettes
                c.bg_patterns = {pattern};
                c.bg_fixed_palette = palette;
                push("background_p" + std::to_string(pattern) + "_c" + std::to_string(palette), c);
            }
            break;
        }
        case PerturbDim::Noise: {
            for (float s : {0.05f, 0.08f, 0.12f, 0.16f, 0.2f}) {
                SceneConfig c = base;
                c.noise_enabled = true;
                c.noise_sigma = {s, s};
                push("noise_" + std::to_string(s).substr(0, 4), c);
            }
            break;
        }
        case PerturbDim::Camera: {
            const std::pair<float, float> offsets[] = {{3.f, 0.f}, {-3.f, 0.f}, {0.f, 3.f}, {0.f, -3.f}, {2.f, -2.f}};
            for (auto [dx, dy] : offsets) {
                SceneConfig c = base;
                c.camera_enabled = true;
                c.cam_dx = {dx, dx};
                c.cam_dy = {dy, dy};
                push("camera_" + std::to_string(static_cast<int>(dx)) + "_" + std::to_string(static_cast<int>(dy)), c);
            }
            break;
        }
        case PerturbDim::Layout: {
            for (int i = 0; i < 5; ++i) {
                SceneConfig c = base;
                c.object_count = std::min(base.object_count + 2, 5);
                c.placement_salt = base.placement_salt + 101 + static_cast<uint64_t>(i);
                if (i >= 3) c.min_spacing = 0.10f;
                push("layout_" + std::to_string(i), c);
            }
            break;
        }
        case PerturbDim::Language: {
            for (int t = 1; t <= 5; ++t) {
                SceneConfig c = base;
                c.instruction_templates = {t};
                push("template_" + std::to_string(t), c);
            }
            break;
        }
    }
    return out;
}

}  // namespace vlalab::sim
