#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace vlalab::core {

// splitmix64; used to derive independent sub-seeds from a base seed.
inline uint64_t mix_seed(uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline uint64_t mix_seed(uint64_t a, uint64_t b) { return mix_seed(mix_seed(a) ^ (0x632be59bd9b4e019ull * (b + 1))); }
inline uint64_t mix_seed(uint64_t a, uint64_t b, uint64_t c) { return mix_seed(mix_seed(a, b), c); }

// Deterministic RNG. All distributions are implemented by hand on top of
// mt19937_64 so that streams are bit-identical across platforms and
// standard-library versions.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t u64() { return gen_(); }
    uint32_t u32() { return static_cast<uint32_t>(gen_() >> 32); }

    // [0, 1)
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // [lo, hi)
    int64_t randint(int64_t lo, int64_t hi) {
        return lo + static_cast<int64_t>(u64() % static_cast<uint64_t>(hi - lo));
    }

    // standard normal via Box-Muller
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
        double u2 = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (int64_t i = static_cast<int64_t>(v.size()) - 1; i > 0; --i) {
            int64_t j = randint(0, i + 1);
            std::swap(v[static_cast<size_t>(i)], v[static_cast<size_t>(j)]);
        }
    }

private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace vlalab::core
