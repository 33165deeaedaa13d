#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace tokcast {

enum class Colorspace { C444, C420, RGB24 };

struct VideoMeta {
    int width = 0;
    int height = 0;
    int fps_num = 30;
    int fps_den = 1;
    Colorspace colorspace = Colorspace::C444;

    void validate() const {
        if (width <= 0 || height <= 0)
            throw std::invalid_argument("VideoMeta: non-positive dimensions");
        if (fps_num <= 0 || fps_den <= 0)
            throw std::invalid_argument("VideoMeta: non-positive frame rate");
    }

    // Capture time of frame k in milliseconds, rounded to microseconds.
    double capture_time_ms(int64_t index) const {
        double us = static_cast<double>(index) * 1e6 * fps_den / fps_num;
        return static_cast<double>(static_cast<int64_t>(us + 0.5)) / 1000.0;
    }
};

// One RGB video frame. pixels is H*W*3 bytes, row-major, channels R,G,B.
struct Frame {
    VideoMeta meta;
    std::vector<uint8_t> pixels;
    int64_t index = 0;
    double capture_time_ms = 0.0;

    Frame() = default;
    Frame(const VideoMeta& m, int64_t idx)
        : meta(m),
          pixels(static_cast<size_t>(m.width) * m.height * 3, 0),
          index(idx),
          capture_time_ms(m.capture_time_ms(idx)) {}

    uint8_t& at(int y, int x, int c) {
        return pixels[(static_cast<size_t>(y) * meta.width + x) * 3 + c];
    }
    uint8_t at(int y, int x, int c) const {
        return pixels[(static_cast<size_t>(y) * meta.width + x) * 3 + c];
    }
};

}  // namespace tokcast
