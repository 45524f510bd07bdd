#include "vlalab/enc/feature_cache.hpp"

#include <fstream>

#include "vlalab/core/serialize.hpp"

namespace vlalab::enc {

using namespace core;

namespace {
constexpr char kFeatMagic[16] = {'V', 'L', 'A', 'L', 'A', 'B', '.', 'F', 'E', 'A', 'T', '.', 'v', '1', 0, 0};
}

const float* FeatureCache::get(int traj, int step) const {
    auto it = index.find(key(traj, step));
    if (it == index.end())
        throw std::out_of_range("feature cache: no entry for trajectory " + std::to_string(traj) + " step " +
                                std::to_string(step));
    return payload.data() + it->second;
}

void build_feature_cache(const sim::Dataset& ds, const EncoderCheckpoint& ck, const std::string& path, int stride) {
    if (stride < 1) throw std::invalid_argument("build_feature_cache: stride must be >= 1");
    std::vector<std::pair<int, int>> entries;
    for (size_t t = 0; t < ds.trajectories.size(); ++t)
        for (size_t s = 0; s < ds.trajectories[t].steps.size(); ++s)
            if (s % static_cast<size_t>(stride) == 0) entries.emplace_back(static_cast<int>(t), static_cast<int>(s));

    const int n = ck.feature_tokens(), c = ck.feature_width();
    const size_t feat_floats = static_cast<size_t>(n) * c;

    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("build_feature_cache: cannot open '" + path + "' for writing");
    io::write_bytes(os, kFeatMagic, 16);

    json meta;
    meta["dataset"] = ds.id();
    meta["encoder"] = ck.id();
    meta["family"] = family_name(ck.family);
    meta["tokens"] = n;
    meta["width"] = c;
    meta["stride"] = stride;
    json idx = json::array();
    for (size_t i = 0; i < entries.size(); ++i)
        idx.push_back({{"traj", entries[i].first}, {"step", entries[i].second}, {"offset", i * feat_floats}});
    meta["index"] = idx;
    std::string ms = meta.dump();
    io::write_u64(os, ms.size());
    io::write_bytes(os, ms.data(), ms.size());

    for (size_t ofs = 0; ofs < entries.size(); ofs += 32) {
        std::vector<std::pair<const std::vector<float>*, const std::vector<float>*>> clips;
        for (size_t i = ofs; i < std::min(ofs + 32, entries.size()); ++i) {
            auto [t, s] = entries[i];
            const auto& traj = ds.trajectories[static_cast<size_t>(t)];
            const auto& cur = traj.steps[static_cast<size_t>(s)].frame;
            const auto& prev = s > 0 ? traj.steps[static_cast<size_t>(s - 1)].frame : cur;
            clips.emplace_back(&prev, &cur);
        }
        Tensor feats = encode_batch(ck, clips);
        io::write_f32_span(os, feats.data(), static_cast<size_t>(feats.numel()));
    }
    if (!os) throw std::runtime_error("build_feature_cache: write failed for '" + path + "'");
}

FeatureCache load_feature_cache(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_feature_cache: cannot open '" + path + "'");
    char magic[16];
    io::read_bytes(is, magic, 16);
    if (std::memcmp(magic, kFeatMagic, 16) != 0)
        throw std::runtime_error("load_feature_cache: '" + path + "' is not a feature cache (bad magic)");
    uint64_t mlen = io::read_u64(is);
    std::string ms(mlen, '\0');
    io::read_bytes(is, ms.data(), mlen);

    FeatureCache fc;
    fc.meta = json::parse(ms);
    fc.tokens = fc.meta.at("tokens");
    fc.width = fc.meta.at("width");
    size_t feat_floats = static_cast<size_t>(fc.tokens) * fc.width;
    size_t count = fc.meta.at("index").size();
    fc.payload.resize(count * feat_floats);
    io::read_f32_span(is, fc.payload.data(), fc.payload.size());
    for (const auto& e : fc.meta.at("index"))
        fc.index[FeatureCache::key(e.at("traj"), e.at("step"))] = e.at("offset").get<size_t>();
    return fc;
}

}  // namespace vlalab::enc
