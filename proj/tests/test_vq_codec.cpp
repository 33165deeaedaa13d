#include <cmath>
#include <cstdio>
#include <limits>

#include "doctest.h"
#include "tokcast/synth.hpp"
#include "tokcast/vq_codec.hpp"

using namespace tokcast;

namespace {

Frame uniform_frame(int width, int height, uint8_t value) {
    VideoMeta meta{width, height, 30, 1, Colorspace::RGB24};
    Frame f(meta, 0);
    std::fill(f.pixels.begin(), f.pixels.end(), value);
    return f;
}

}  // namespace

TEST_CASE("patch geometry arithmetic") {
    PatchGeometry g{32, 32, 16, 2};
    CHECK(g.channels() == 12);
    CHECK(g.frame_width() == 512);
    CHECK(g.frame_height() == 512);
    CHECK(g.cells() == 1024);
    g.validate();

    PatchGeometry bad{16, 16, 16, 3};  // 3 does not divide 16
    CHECK_THROWS(bad.validate());
}

TEST_CASE("extract_features on uniform input") {
    PatchGeometry g{4, 4, 8, 2};
    Frame f = uniform_frame(32, 32, 128);
    FeatureGrid feats = extract_features(f, g);
    REQUIRE(feats.size() == static_cast<size_t>(g.cells()) * g.channels());
    for (float v : feats) CHECK(v == 128.0f);

    SUBCASE("dimension mismatch") {
        CHECK_THROWS(extract_features(uniform_frame(16, 16, 0), g));
    }
}

TEST_CASE("extract_features averages pixel blocks") {
    // 1x1 grid, p=2, d=1: feature = mean of the 2x2 patch per channel
    PatchGeometry g{1, 1, 2, 1};
    Frame f = uniform_frame(2, 2, 0);
    f.at(0, 0, 0) = 10;
    f.at(0, 1, 0) = 20;
    f.at(1, 0, 0) = 30;
    f.at(1, 1, 0) = 40;
    FeatureGrid feats = extract_features(f, g);
    CHECK(feats[0] == doctest::Approx(25.0));
    CHECK(feats[1] == 0.0f);
    CHECK(feats[2] == 0.0f);
}

TEST_CASE("fit_codebook degenerate two-feature corpus") {
    // two flat frames -> exactly two distinct features, N=2 -> zero MSE
    std::vector<Frame> frames{uniform_frame(16, 16, 10), uniform_frame(16, 16, 200)};
    PatchGeometry g{2, 2, 8, 2};
    std::vector<double> mse;
    Codebook cb = fit_codebook(frames, 2, g, 20, 7, &mse);
    REQUIRE(!mse.empty());
    CHECK(mse.back() == 0.0);
    for (float c : cb.centroids) CHECK((c == 10.0f || c == 200.0f));
}

TEST_CASE("fit_codebook insufficient diversity") {
    std::vector<Frame> frames{uniform_frame(16, 16, 77)};
    PatchGeometry g{2, 2, 8, 2};
    CHECK_THROWS_WITH(fit_codebook(frames, 3, g, 10, 1, nullptr),
                      doctest::Contains("insufficient-diversity"));
}

TEST_CASE("fit_codebook mse is non-increasing and deterministic") {
    auto frames = synth_sequence(SynthConfig::random_scene(64, 64, 4, 21), 8);
    PatchGeometry g{4, 4, 16, 2};
    std::vector<double> mse;
    Codebook a = fit_codebook(frames, 8, g, 30, 5, &mse);
    for (size_t i = 1; i < mse.size(); ++i) CHECK(mse[i] <= mse[i - 1] + 1e-9);

    Codebook b = fit_codebook(frames, 8, g, 30, 5, nullptr);
    CHECK(a.centroids == b.centroids);
    CHECK(a.static_fill_token == b.static_fill_token);
}

TEST_CASE("encode matches a brute-force nearest-neighbor scan") {
    auto frames = synth_sequence(SynthConfig::random_scene(64, 64, 5, 33), 6);
    PatchGeometry g{8, 8, 8, 2};
    Codebook cb = fit_codebook(frames, 16, g, 20, 9, nullptr);
    const int C = cb.channels();

    for (const auto& f : frames) {
        TokenGrid grid = encode(f, cb);
        FeatureGrid feats = extract_features(f, g);
        for (int cell = 0; cell < g.cells(); ++cell) {
            const float* feat = feats.data() + static_cast<size_t>(cell) * C;
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int n = 0; n < cb.entry_count; ++n) {
                double dist = 0.0;
                for (int c = 0; c < C; ++c) {
                    double diff = static_cast<double>(feat[c]) - cb.centroid(n)[c];
                    dist += diff * diff;
                }
                if (dist < best_d) {
                    best_d = dist;
                    best = n;
                }
            }
            CHECK(grid.entries[static_cast<size_t>(cell)] == best);
        }
    }
}

TEST_CASE("decode tiles centroid patches") {
    PatchGeometry g{2, 2, 4, 4};  // d=p: features are raw pixels
    Codebook cb;
    cb.entry_count = 2;
    cb.geometry = g;
    cb.centroids.resize(2 * static_cast<size_t>(g.channels()));
    for (int c = 0; c < g.channels(); ++c) {
        cb.centroids[static_cast<size_t>(c)] = 40.0f;
        cb.centroids[static_cast<size_t>(g.channels() + c)] = 200.0f;
    }

    TokenGrid grid(g);
    std::fill(grid.entries.begin(), grid.entries.end(), 1);
    Frame out = decode(grid, cb);
    for (uint8_t v : out.pixels) CHECK(v == 200);

    SUBCASE("index out of range") {
        grid.entries[0] = 5;
        CHECK_THROWS(decode(grid, cb));
    }
}

TEST_CASE("quantization is idempotent when d equals p") {
    auto frames = synth_sequence(SynthConfig::random_scene(32, 32, 3, 13), 6);
    PatchGeometry g{8, 8, 4, 4};
    Codebook cb = fit_codebook(frames, 8, g, 30, 2, nullptr);

    for (const auto& f : frames) {
        TokenGrid t = encode(f, cb);
        CHECK(encode(decode(t, cb), cb).entries == t.entries);
    }
}

TEST_CASE("render_features bilinear interior values") {
    // one patch, d=2, p=4: taps at (t+0.5)/2-0.5 for t in 0..3
    PatchGeometry g{1, 1, 4, 2};
    FeatureGrid feats(static_cast<size_t>(g.channels()), 0.0f);
    // red plane: [[0, 100], [0, 100]] -> rows identical, columns interpolate
    feats[1] = 100.0f;
    feats[3] = 100.0f;
    Frame out = render_features(feats, g);
    // src x for t=0..3: clamp(-0.25)=0, 0.25, 0.75, clamp(1.25)=1
    CHECK(out.at(0, 0, 0) == 0);
    CHECK(out.at(0, 1, 0) == 25);
    CHECK(out.at(0, 2, 0) == 75);
    CHECK(out.at(0, 3, 0) == 100);
    for (int y = 1; y < 4; ++y)
        for (int x = 0; x < 4; ++x) CHECK(out.at(y, x, 0) == out.at(0, x, 0));
}

TEST_CASE("rounding is half away from zero") {
    PatchGeometry g{1, 1, 2, 1};
    FeatureGrid feats{127.5f, 0.0f, 0.0f};
    Frame out = render_features(feats, g);
    CHECK(out.at(0, 0, 0) == 128);
}

TEST_CASE("temporal independence of encode") {
    auto frames = synth_sequence(SynthConfig::random_scene(64, 64, 4, 8), 6);
    PatchGeometry g{4, 4, 16, 2};
    Codebook cb = fit_codebook(frames, 8, g, 20, 3, nullptr);

    std::vector<TokenGrid> forward, reversed;
    for (const auto& f : frames) forward.push_back(encode(f, cb));
    for (auto it = frames.rbegin(); it != frames.rend(); ++it) reversed.push_back(encode(*it, cb));
    for (size_t i = 0; i < frames.size(); ++i)
        CHECK(forward[i].entries == reversed[frames.size() - 1 - i].entries);
}

TEST_CASE("bits_per_index") {
    Codebook cb;
    cb.entry_count = 2;
    CHECK(cb.bits_per_index() == 1);
    cb.entry_count = 64;
    CHECK(cb.bits_per_index() == 6);
    cb.entry_count = 65;
    CHECK(cb.bits_per_index() == 7);
    cb.entry_count = 1024;
    CHECK(cb.bits_per_index() == 10);
}

TEST_CASE("codebook save load round trip") {
    auto frames = synth_sequence(SynthConfig::random_scene(32, 32, 2, 6), 4);
    PatchGeometry g{4, 4, 8, 2};
    Codebook cb = fit_codebook(frames, 4, g, 20, 1, nullptr);

    std::string path = "/tmp/tokcast_test_cb.bin";
    save_codebook(cb, path);
    Codebook back = load_codebook(path);
    CHECK(back.entry_count == cb.entry_count);
    CHECK(back.geometry == cb.geometry);
    CHECK(back.centroids == cb.centroids);
    CHECK(back.static_fill_token == cb.static_fill_token);

    SUBCASE("bad magic") {
        std::string junk = "/tmp/tokcast_test_cb_bad.bin";
        std::FILE* fp = std::fopen(junk.c_str(), "wb");
        std::fputs("NOPE", fp);
        std::fclose(fp);
        CHECK_THROWS(load_codebook(junk));
    }
}

TEST_CASE("codec psnr on synthetic corpus") {
    auto frames = synth_sequence(SynthConfig::random_scene(256, 256, 5, 4), 20);
    PatchGeometry g{16, 16, 16, 2};
    Codebook cb = fit_codebook(frames, 64, g, 25, 1, nullptr);

    for (const auto& f : frames) {
        Frame rec = decode(encode(f, cb), cb);
        double mse = 0.0;
        for (size_t i = 0; i < f.pixels.size(); ++i) {
            double d = static_cast<double>(f.pixels[i]) - rec.pixels[i];
            mse += d * d;
        }
        mse /= static_cast<double>(f.pixels.size());
        double psnr = mse == 0.0 ? 99.0 : 10.0 * std::log10(255.0 * 255.0 / mse);
        CHECK(psnr >= 22.0);
    }
}
