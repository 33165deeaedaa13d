#include "tokcast/synth.hpp"

#include <algorithm>
#include <stdexcept>

#include "tokcast/prng.hpp"

namespace tokcast {

SynthConfig SynthConfig::random_scene(int width, int height, int count, uint64_t seed) {
    SynthConfig cfg;
    cfg.width = width;
    cfg.height = height;
    cfg.seed = seed;
    Prng rng(seed);
    for (int i = 0; i < count; ++i) {
        SynthObject o;
        // sizes capped well below the frame so a placement always exists
        o.w = 1 + width / 8 + static_cast<int>(rng.next_below(std::max(width / 4, 1)));
        o.h = 1 + height / 8 + static_cast<int>(rng.next_below(std::max(height / 4, 1)));
        o.color = {static_cast<uint8_t>(rng.next_below(256)),
                   static_cast<uint8_t>(rng.next_below(256)),
                   static_cast<uint8_t>(rng.next_below(256))};
        o.x = static_cast<int>(rng.next_below(static_cast<uint64_t>(width - o.w)));
        o.y = static_cast<int>(rng.next_below(static_cast<uint64_t>(height - o.h)));
        o.vx = static_cast<int>(rng.next_below(7)) - 3;
        o.vy = static_cast<int>(rng.next_below(7)) - 3;
        cfg.objects.push_back(o);
    }
    return cfg;
}

namespace {

// Advance one axis by one frame, reflecting at [0, limit].
void step_axis(int& pos, int& vel, int limit) {
    pos += vel;
    if (pos < 0) {
        pos = -pos;
        vel = -vel;
    } else if (pos > limit) {
        pos = 2 * limit - pos;
        vel = -vel;
    }
}

}  // namespace

std::vector<Frame> synth_sequence(const SynthConfig& cfg, int count) {
    if (count < 0) throw std::invalid_argument("synth_sequence: negative count");
    VideoMeta meta{cfg.width, cfg.height, cfg.fps_num, cfg.fps_den, Colorspace::RGB24};
    meta.validate();

    std::vector<SynthObject> objs = cfg.objects;
    for (const auto& o : objs) {
        if (o.w > cfg.width || o.h > cfg.height)
            throw std::invalid_argument("synth_sequence: object larger than frame");
        if (o.x < 0 || o.y < 0 || o.x + o.w > cfg.width || o.y + o.h > cfg.height)
            throw std::invalid_argument("synth_sequence: object outside frame");
    }

    std::vector<Frame> out;
    out.reserve(static_cast<size_t>(count));
    for (int k = 0; k < count; ++k) {
        Frame f(meta, k);
        for (size_t i = 0; i < f.pixels.size(); i += 3) {
            f.pixels[i] = cfg.background[0];
            f.pixels[i + 1] = cfg.background[1];
            f.pixels[i + 2] = cfg.background[2];
        }
        for (const auto& o : objs) {
            for (int y = o.y; y < o.y + o.h; ++y)
                for (int x = o.x; x < o.x + o.w; ++x) {
                    f.at(y, x, 0) = o.color[0];
                    f.at(y, x, 1) = o.color[1];
                    f.at(y, x, 2) = o.color[2];
                }
        }
        out.push_back(std::move(f));
        for (auto& o : objs) {
            step_axis(o.x, o.vx, cfg.width - o.w);
            step_axis(o.y, o.vy, cfg.height - o.h);
        }
    }
    return out;
}

}  // namespace tokcast
