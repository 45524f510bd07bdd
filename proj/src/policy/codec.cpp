#include "vlalab/policy/codec.hpp"

#include <algorithm>
#include <cmath>

namespace vlalab::policy {

std::array<int, ActionCodec::kDims> ActionCodec::quantize(const sim::Action& a) const {
    std::array<float, kDims> v = {a.delta.x, a.delta.y, a.grip};
    std::array<int, kDims> out{};
    for (int d = 0; d < kDims; ++d) {
        auto [lo, hi] = bounds[static_cast<size_t>(d)];
        float x = std::min(std::max(v[static_cast<size_t>(d)], lo), hi);
        int bin = static_cast<int>(std::floor((x - lo) / (hi - lo) * kBins));
        out[static_cast<size_t>(d)] = std::min(std::max(bin, 0), kBins - 1);
    }
    return out;
}

sim::Action ActionCodec::dequantize(const std::array<int, kDims>& tokens) const {
    std::array<float, kDims> v{};
    for (int d = 0; d < kDims; ++d) {
        auto [lo, hi] = bounds[static_cast<size_t>(d)];
        int bin = std::min(std::max(tokens[static_cast<size_t>(d)], 0), kBins - 1);
        v[static_cast<size_t>(d)] = lo + (static_cast<float>(bin) + 0.5f) * (hi - lo) / kBins;
    }
    sim::Action a;
    a.delta = {v[0], v[1]};
    a.grip = v[2];
    return a;
}

std::array<float, ActionCodec::kDims> ActionCodec::to_unit(const sim::Action& a) const {
    std::array<float, kDims> raw = {a.delta.x, a.delta.y, a.grip};
    std::array<float, kDims> out{};
    for (int d = 0; d < kDims; ++d) {
        auto [lo, hi] = bounds[static_cast<size_t>(d)];
        float mid = (lo + hi) * 0.5f, half = (hi - lo) * 0.5f;
        out[static_cast<size_t>(d)] = (raw[static_cast<size_t>(d)] - mid) / half;
    }
    return out;
}

sim::Action ActionCodec::from_unit(const float* v) const {
    std::array<float, kDims> raw{};
    for (int d = 0; d < kDims; ++d) {
        auto [lo, hi] = bounds[static_cast<size_t>(d)];
        float mid = (lo + hi) * 0.5f, half = (hi - lo) * 0.5f;
        raw[static_cast<size_t>(d)] = mid + v[d] * half;
    }
    sim::Action a;
    a.delta = {raw[0], raw[1]};
    a.grip = raw[2];
    return a;
}

}  // namespace vlalab::policy
