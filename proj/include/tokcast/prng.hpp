#pragma once

#include <cstdint>

namespace tokcast {

// SplitMix64. One generator for everything in the repo so that runs are
// reproducible bit-for-bit across platforms.
struct Prng {
    uint64_t state = 0;

    explicit Prng(uint64_t seed = 0) : state(seed) {}

    uint64_t next() {
        state += 0x9E3779B97F4A7C15ull;
        uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double next_unit() {
        return static_cast<double>(next() >> 11) * (1.0 / 9007199254740992.0);
    }

    // Uniform in [0, bound). Modulo bias is negligible for the bounds used
    // here (bound <= 1024).
    uint64_t next_below(uint64_t bound) { return next() % bound; }
};

}  // namespace tokcast
