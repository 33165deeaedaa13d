#pragma once

#include <fstream>
#include <memory>
#include <optional>
#include <string>

#include "tokcast/frame.hpp"

namespace tokcast {

// Y4M ("YUV4MPEG2") stream reader. C444 and C420 streams are converted to
// RGB via BT.601 limited-range on read; the test-only "Crgb24" tag stores
// R,G,B planes directly and bypasses the matrix.
class Y4mReader {
public:
    explicit Y4mReader(const std::string& path);

    const VideoMeta& meta() const { return meta_; }

    // Returns the next frame, or nullopt at end of stream.
    std::optional<Frame> read_frame();

private:
    std::ifstream in_;
    VideoMeta meta_;
    int64_t next_index_ = 0;
};

class Y4mWriter {
public:
    Y4mWriter(const std::string& path, const VideoMeta& meta);
    void write_frame(const Frame& frame);

private:
    std::ofstream out_;
    VideoMeta meta_;
};

// Raw interleaved RGB24 file with a JSON sidecar ("<path>.json") holding
// {width, height, fps_num, fps_den}.
class RawRgbReader {
public:
    explicit RawRgbReader(const std::string& path);
    const VideoMeta& meta() const { return meta_; }
    std::optional<Frame> read_frame();

private:
    std::ifstream in_;
    VideoMeta meta_;
    int64_t next_index_ = 0;
};

// Opens either format based on the file's leading bytes.
class FrameSource {
public:
    explicit FrameSource(const std::string& path);
    const VideoMeta& meta() const;
    std::optional<Frame> read_frame();

private:
    std::unique_ptr<Y4mReader> y4m_;
    std::unique_ptr<RawRgbReader> raw_;
};

// BT.601 limited-range YCbCr -> RGB, clamped to [0, 255].
void yuv_to_rgb(uint8_t y, uint8_t u, uint8_t v, uint8_t* rgb);

}  // namespace tokcast
