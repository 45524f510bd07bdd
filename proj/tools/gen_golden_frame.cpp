// Regenerates the frozen renderer fixture (tests/data/golden_frame_seed0.bin).
// Run manually when the renderer intentionally changes; tests compare
// bit-exactly against the committed bytes.

#include <cstdio>
#include <fstream>

#include "vlalab/sim/dataset.hpp"

int main(int argc, char** argv) {
    if (argc != 2) {
        std::fprintf(stderr, "usage: gen_golden_frame <out.bin>\n");
        return 2;
    }
    using namespace vlalab::sim;
    SceneConfig config;  // clean defaults, resolution 32
    ResetResult r = reset(config, 0);
    std::vector<float> frame = render(r.world, r.nuisance, config.resolution, frame_noise_seed(0, 0));
    std::ofstream os(argv[1], std::ios::binary);
    os.write(reinterpret_cast<const char*>(frame.data()), static_cast<std::streamsize>(frame.size() * sizeof(float)));
    if (!os) {
        std::fprintf(stderr, "write failed: %s\n", argv[1]);
        return 1;
    }
    std::printf("wrote %zu floats to %s\n", frame.size(), argv[1]);
    return 0;
}
