#include "vlalab/sim/render.hpp"

#include <cmath>

namespace vlalab::sim {

namespace {

constexpr float kTwoPi = 6.2831853071795864769f;

float clamp01(float v) { return v < 0.f ? 0.f : (v > 1.f ? 1.f : v); }

void background_rgb(const Background& bg, float u, float v, float* rgb) {
    switch (bg.pattern) {
        case 0: {  // checker, 4 cells per unit
            int cu = static_cast<int>(std::floor((u + bg.phase) * 4.f));
            int cv = static_cast<int>(std::floor(v * 4.f));
            const auto& c = ((cu + cv) % 2 + 2) % 2 == 0 ? bg.c0 : bg.c1;
            for (int i = 0; i < 3; ++i) rgb[i] = c[i];
            break;
        }
        case 1: {  // vertical stripes, 5 per unit
            int s = static_cast<int>(std::floor((u + bg.phase) * 5.f));
            const auto& c = (s % 2 + 2) % 2 == 0 ? bg.c0 : bg.c1;
            for (int i = 0; i < 3; ++i) rgb[i] = c[i];
            break;
        }
        default: {  // diagonal sinusoid
            float t = 0.5f + 0.5f * std::sin(kTwoPi * (2.5f * (u + v) + bg.phase));
            for (int i = 0; i < 3; ++i) rgb[i] = bg.c0[i] + (bg.c1[i] - bg.c0[i]) * t;
            break;
        }
    }
}

bool inside_object(const ObjectState& o, float u, float v, float r) {
    float dx = u - o.pos.x, dy = v - o.pos.y;
    switch (o.shape) {
        case kDisc:
            return dx * dx + dy * dy <= r * r;
        case kSquare: {
            float h = r * 0.85f;
            return std::abs(dx) <= h && std::abs(dy) <= h;
        }
        default: {  // upward triangle with circumradius r
            float ax = 0.f, ay = -r;
            float bx = -0.866f * r, by = 0.5f * r;
            float cx = 0.866f * r, cy = 0.5f * r;
            auto side = [&](float x1, float y1, float x2, float y2) {
                return (x2 - x1) * (dy - y1) - (y2 - y1) * (dx - x1);
            };
            float s1 = side(ax, ay, bx, by);
            float s2 = side(bx, by, cx, cy);
            float s3 = side(cx, cy, ax, ay);
            bool neg = s1 < 0 || s2 < 0 || s3 < 0;
            bool pos = s1 > 0 || s2 > 0 || s3 > 0;
            return !(neg && pos);
        }
    }
}

bool inside_gripper(const WorldState& w, float u, float v) {
    float dx = std::abs(u - w.gripper.x), dy = std::abs(v - w.gripper.y);
    const float arm = 0.055f, thick = 0.018f;
    return (dx <= arm && dy <= thick) || (dy <= arm && dx <= thick);
}

// label: 0 background, 1+id object, 255 gripper
uint8_t pixel_label(const WorldState& w, float u, float v, float object_radius) {
    if (inside_gripper(w, u, v)) return 255;
    uint8_t label = 0;
    for (const auto& o : w.objects)
        if (inside_object(o, u, v, object_radius)) label = static_cast<uint8_t>(1 + o.id);
    return label;
}

}  // namespace

std::vector<float> render(const WorldState& world, const NuisanceState& nu, int resolution, uint64_t noise_seed) {
    if (resolution != 32 && resolution != 64)
        throw std::invalid_argument("render: resolution must be 32 or 64, got " + std::to_string(resolution));
    const float object_radius = 0.06f;
    std::vector<float> frame(static_cast<size_t>(resolution) * resolution * 3);
    float inv = 1.f / static_cast<float>(resolution);
    for (int i = 0; i < resolution; ++i) {
        for (int j = 0; j < resolution; ++j) {
            float u = (static_cast<float>(j) + 0.5f + nu.cam_dx) * inv;
            float v = (static_cast<float>(i) + 0.5f + nu.cam_dy) * inv;
            float rgb[3];
            background_rgb(nu.bg, u, v, rgb);
            uint8_t label = pixel_label(world, u, v, object_radius);
            if (label == 255) {
                rgb[0] = rgb[1] = rgb[2] = 1.f;
            } else if (label > 0) {
                const auto& c = object_palette()[static_cast<size_t>(world.objects[label - 1].color)];
                for (int ch = 0; ch < 3; ++ch) rgb[ch] = c[ch];
            }
            float* px = frame.data() + (static_cast<size_t>(i) * resolution + j) * 3;
            for (int ch = 0; ch < 3; ++ch) px[ch] = clamp01(nu.brightness * rgb[ch] + nu.tint[static_cast<size_t>(ch)]);
        }
    }
    if (nu.noise_sigma > 0.f) {
        core::Rng rng(noise_seed);
        for (auto& p : frame) p = clamp01(p + nu.noise_sigma * static_cast<float>(rng.normal()));
    }
    return frame;
}

std::vector<float> render_background(const NuisanceState& nu, int resolution) {
    std::vector<float> frame(static_cast<size_t>(resolution) * resolution * 3);
    float inv = 1.f / static_cast<float>(resolution);
    for (int i = 0; i < resolution; ++i) {
        for (int j = 0; j < resolution; ++j) {
            float u = (static_cast<float>(j) + 0.5f + nu.cam_dx) * inv;
            float v = (static_cast<float>(i) + 0.5f + nu.cam_dy) * inv;
            float rgb[3];
            background_rgb(nu.bg, u, v, rgb);
            float* px = frame.data() + (static_cast<size_t>(i) * resolution + j) * 3;
            for (int ch = 0; ch < 3; ++ch) px[ch] = clamp01(nu.brightness * rgb[ch] + nu.tint[static_cast<size_t>(ch)]);
        }
    }
    return frame;
}

std::vector<uint8_t> render_segmentation(const WorldState& world, const NuisanceState& nu, int resolution) {
    const float object_radius = 0.06f;
    std::vector<uint8_t> mask(static_cast<size_t>(resolution) * resolution);
    float inv = 1.f / static_cast<float>(resolution);
    for (int i = 0; i < resolution; ++i)
        for (int j = 0; j < resolution; ++j) {
            float u = (static_cast<float>(j) + 0.5f + nu.cam_dx) * inv;
            float v = (static_cast<float>(i) + 0.5f + nu.cam_dy) * inv;
            mask[static_cast<size_t>(i) * resolution + j] = pixel_label(world, u, v, object_radius);
        }
    return mask;
}

}  // namespace vlalab::sim
