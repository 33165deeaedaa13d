#include "tokcast/y4m.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"

namespace tokcast {

namespace {

uint8_t clamp255(double v) {
    return static_cast<uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

std::string colorspace_tag(Colorspace cs) {
    switch (cs) {
        case Colorspace::C444: return "C444";
        case Colorspace::C420: return "C420";
        case Colorspace::RGB24: return "Crgb24";
    }
    return "C444";
}

}  // namespace

void yuv_to_rgb(uint8_t y, uint8_t u, uint8_t v, uint8_t* rgb) {
    double yy = 1.164 * (y - 16);
    double cb = u - 128.0;
    double cr = v - 128.0;
    rgb[0] = clamp255(yy + 1.596 * cr);
    rgb[1] = clamp255(yy - 0.391 * cb - 0.813 * cr);
    rgb[2] = clamp255(yy + 2.018 * cb);
}

Y4mReader::Y4mReader(const std::string& path) : in_(path, std::ios::binary) {
    if (!in_) throw std::runtime_error("Y4M: cannot open " + path);

    std::string header;
    if (!std::getline(in_, header))
        throw std::runtime_error("Y4M: empty file");
    const std::string magic = "YUV4MPEG2 ";
    if (header.rfind(magic, 0) != 0)
        throw std::runtime_error("Y4M: malformed magic");

    meta_.width = meta_.height = 0;
    meta_.fps_num = 0;
    meta_.fps_den = 0;
    bool have_cs = false;

    std::istringstream params(header.substr(magic.size()));
    std::string tok;
    while (params >> tok) {
        if (tok.empty()) continue;
        switch (tok[0]) {
            case 'W': meta_.width = std::stoi(tok.substr(1)); break;
            case 'H': meta_.height = std::stoi(tok.substr(1)); break;
            case 'F': {
                auto colon = tok.find(':');
                if (colon == std::string::npos)
                    throw std::runtime_error("Y4M: bad F parameter");
                meta_.fps_num = std::stoi(tok.substr(1, colon - 1));
                meta_.fps_den = std::stoi(tok.substr(colon + 1));
                break;
            }
            case 'C': {
                std::string cs = tok.substr(1);
                if (cs.rfind("444", 0) == 0) meta_.colorspace = Colorspace::C444;
                else if (cs.rfind("420", 0) == 0) meta_.colorspace = Colorspace::C420;
                else if (cs == "rgb24") meta_.colorspace = Colorspace::RGB24;
                else throw std::runtime_error("Y4M: unsupported colorspace " + cs);
                have_cs = true;
                break;
            }
            default: break;  // interlace/aspect/extension params ignored
        }
    }
    if (!have_cs) meta_.colorspace = Colorspace::C420;  // Y4M default
    if (meta_.width <= 0 || meta_.height <= 0 || meta_.fps_num <= 0 || meta_.fps_den <= 0)
        throw std::runtime_error("Y4M: missing W/H/F parameters");
}

std::optional<Frame> Y4mReader::read_frame() {
    std::string marker;
    if (!std::getline(in_, marker)) return std::nullopt;
    if (marker.rfind("FRAME", 0) != 0)
        throw std::runtime_error("Y4M: missing FRAME marker");

    const int w = meta_.width, h = meta_.height;
    const size_t luma = static_cast<size_t>(w) * h;
    size_t chroma = luma;
    int cw = w, ch = h;
    if (meta_.colorspace == Colorspace::C420) {
        cw = w / 2;
        ch = h / 2;
        chroma = static_cast<size_t>(cw) * ch;
    }

    std::vector<uint8_t> planes(luma + 2 * chroma);
    in_.read(reinterpret_cast<char*>(planes.data()), static_cast<std::streamsize>(planes.size()));
    if (static_cast<size_t>(in_.gcount()) != planes.size())
        throw std::runtime_error("Y4M: truncated plane data");

    Frame f(meta_, next_index_++);
    const uint8_t* p0 = planes.data();
    const uint8_t* p1 = p0 + luma;
    const uint8_t* p2 = p1 + chroma;

    if (meta_.colorspace == Colorspace::RGB24) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                size_t i = static_cast<size_t>(y) * w + x;
                f.at(y, x, 0) = p0[i];
                f.at(y, x, 1) = p1[i];
                f.at(y, x, 2) = p2[i];
            }
        return f;
    }

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            uint8_t Y = p0[static_cast<size_t>(y) * w + x];
            uint8_t U, V;
            if (meta_.colorspace == Colorspace::C420) {
                // nearest-neighbor chroma upsampling
                size_t ci = static_cast<size_t>(y / 2) * cw + x / 2;
                U = p1[ci];
                V = p2[ci];
            } else {
                size_t ci = static_cast<size_t>(y) * w + x;
                U = p1[ci];
                V = p2[ci];
            }
            yuv_to_rgb(Y, U, V, &f.at(y, x, 0));
        }
    }
    return f;
}

Y4mWriter::Y4mWriter(const std::string& path, const VideoMeta& meta)
    : out_(path, std::ios::binary), meta_(meta) {
    if (!out_) throw std::runtime_error("Y4M: cannot create " + path);
    if (meta_.colorspace == Colorspace::C420)
        throw std::runtime_error("Y4M writer: only C444 and rgb24 supported");
    out_ << "YUV4MPEG2 W" << meta.width << " H" << meta.height << " F" << meta.fps_num << ":"
         << meta.fps_den << " " << colorspace_tag(meta.colorspace) << "\n";
}

void Y4mWriter::write_frame(const Frame& frame) {
    out_ << "FRAME\n";
    const int w = meta_.width, h = meta_.height;
    std::vector<uint8_t> plane(static_cast<size_t>(w) * h);
    if (meta_.colorspace == Colorspace::RGB24) {
        for (int c = 0; c < 3; ++c) {
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    plane[static_cast<size_t>(y) * w + x] = frame.at(y, x, c);
            out_.write(reinterpret_cast<const char*>(plane.data()),
                       static_cast<std::streamsize>(plane.size()));
        }
        return;
    }
    // BT.601 limited-range RGB -> YCbCr, C444
    std::vector<uint8_t> up(plane.size()), vp(plane.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double r = frame.at(y, x, 0), g = frame.at(y, x, 1), b = frame.at(y, x, 2);
            size_t i = static_cast<size_t>(y) * w + x;
            plane[i] = clamp255(16.0 + 0.257 * r + 0.504 * g + 0.098 * b);
            up[i] = clamp255(128.0 - 0.148 * r - 0.291 * g + 0.439 * b);
            vp[i] = clamp255(128.0 + 0.439 * r - 0.368 * g - 0.071 * b);
        }
    out_.write(reinterpret_cast<const char*>(plane.data()), static_cast<std::streamsize>(plane.size()));
    out_.write(reinterpret_cast<const char*>(up.data()), static_cast<std::streamsize>(up.size()));
    out_.write(reinterpret_cast<const char*>(vp.data()), static_cast<std::streamsize>(vp.size()));
}

RawRgbReader::RawRgbReader(const std::string& path) : in_(path, std::ios::binary) {
    if (!in_) throw std::runtime_error("raw RGB: cannot open " + path);
    std::ifstream side(path + ".json");
    if (!side) throw std::runtime_error("raw RGB: missing sidecar " + path + ".json");
    nlohmann::json j;
    side >> j;
    meta_.width = j.at("width").get<int>();
    meta_.height = j.at("height").get<int>();
    meta_.fps_num = j.at("fps_num").get<int>();
    meta_.fps_den = j.at("fps_den").get<int>();
    meta_.colorspace = Colorspace::RGB24;
    meta_.validate();
}

std::optional<Frame> RawRgbReader::read_frame() {
    Frame f(meta_, next_index_);
    in_.read(reinterpret_cast<char*>(f.pixels.data()), static_cast<std::streamsize>(f.pixels.size()));
    if (in_.gcount() == 0) return std::nullopt;
    if (static_cast<size_t>(in_.gcount()) != f.pixels.size())
        throw std::runtime_error("raw RGB: truncated frame");
    ++next_index_;
    return f;
}

FrameSource::FrameSource(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw std::runtime_error("cannot open " + path);
    char magic[10] = {};
    probe.read(magic, 10);
    if (probe.gcount() == 10 && std::string(magic, 10) == "YUV4MPEG2 ")
        y4m_ = std::make_unique<Y4mReader>(path);
    else
        raw_ = std::make_unique<RawRgbReader>(path);
}

const VideoMeta& FrameSource::meta() const { return y4m_ ? y4m_->meta() : raw_->meta(); }

std::optional<Frame> FrameSource::read_frame() {
    return y4m_ ? y4m_->read_frame() : raw_->read_frame();
}

}  // namespace tokcast
