#pragma once

#include <array>

#include "vlalab/sim/world.hpp"

namespace vlalab::policy {

// 256 uniform bins per action dimension over fixed bounds; dequantize returns
// bin centers, so round-trip error is at most half a bin width.
struct ActionCodec {
    static constexpr int kBins = 256;
    static constexpr int kDims = 3;
    std::array<std::pair<float, float>, kDims> bounds = {{{-0.1f, 0.1f}, {-0.1f, 0.1f}, {-1.f, 1.f}}};

    float bin_width(int dim) const { return (bounds[static_cast<size_t>(dim)].second - bounds[static_cast<size_t>(dim)].first) / kBins; }

    std::array<int, kDims> quantize(const sim::Action& a) const;
    sim::Action dequantize(const std::array<int, kDims>& tokens) const;

    // continuous regression targets live on a per-dimension unit scale
    std::array<float, kDims> to_unit(const sim::Action& a) const;
    sim::Action from_unit(const float* v) const;
};

}  // namespace vlalab::policy
