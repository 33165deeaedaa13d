#pragma once

#include <array>
#include <vector>

#include "tokcast/frame.hpp"

namespace tokcast {

// Deterministic synthetic test sequences: flat background plus rectangles
// translating with integer velocities and reflecting off the borders.
// Temporally coherent by construction, which is what makes temporal
// recovery meaningful on generated data.
struct SynthObject {
    int w = 0, h = 0;
    std::array<uint8_t, 3> color{};
    int x = 0, y = 0;    // top-left at frame 0
    int vx = 0, vy = 0;  // pixels per frame
};

struct SynthConfig {
    int width = 256;
    int height = 256;
    int fps_num = 30;
    int fps_den = 1;
    std::array<uint8_t, 3> background{32, 48, 64};
    std::vector<SynthObject> objects;
    uint64_t seed = 1;

    // Populates `objects` with `count` random rectangles using the repo PRNG.
    static SynthConfig random_scene(int width, int height, int count, uint64_t seed);
};

std::vector<Frame> synth_sequence(const SynthConfig& cfg, int count);

}  // namespace tokcast
