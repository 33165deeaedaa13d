#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tokcast/frame.hpp"

namespace tokcast {

// Token-grid geometry: an H x W frame maps to an h x w grid of tokens, one
// per p x p patch. Each patch is average-pooled to d x d per channel, so a
// feature has C = 3*d*d components.
struct PatchGeometry {
    int h = 16;
    int w = 16;
    int p = 16;
    int d = 2;

    int channels() const { return 3 * d * d; }
    int frame_width() const { return w * p; }
    int frame_height() const { return h * p; }
    int cells() const { return h * w; }

    void validate() const {
        if (h <= 0 || w <= 0 || p <= 0 || d <= 0)
            throw std::invalid_argument("PatchGeometry: non-positive field");
        if (p % d != 0) throw std::invalid_argument("PatchGeometry: d must divide p");
    }
    bool operator==(const PatchGeometry&) const = default;
};

struct TokenGrid {
    PatchGeometry geometry;
    std::vector<uint16_t> entries;  // h*w indices, row-major

    TokenGrid() = default;
    explicit TokenGrid(const PatchGeometry& g)
        : geometry(g), entries(static_cast<size_t>(g.cells()), 0) {}

    uint16_t& at(int i, int j) { return entries[static_cast<size_t>(i) * geometry.w + j]; }
    uint16_t at(int i, int j) const { return entries[static_cast<size_t>(i) * geometry.w + j]; }
    bool operator==(const TokenGrid&) const = default;
};

struct Codebook {
    int entry_count = 0;  // N
    PatchGeometry geometry;
    std::vector<float> centroids;       // N x C, row-major, values in [0, 255]
    uint16_t static_fill_token = 0;     // most frequent training token, used by static fill

    int channels() const { return geometry.channels(); }
    int bits_per_index() const;

    const float* centroid(int n) const {
        return centroids.data() + static_cast<size_t>(n) * channels();
    }
};

// Per-cell patch features: h*w rows of C components each, values in [0, 255].
using FeatureGrid = std::vector<float>;

FeatureGrid extract_features(const Frame& frame, const PatchGeometry& geometry);

// Lloyd's k-means over the pooled patch features of `frames`. Deterministic
// given (frames, N, seed). Throws if the corpus has fewer than N distinct
// features.
Codebook fit_codebook(const std::vector<Frame>& frames, int entry_count,
                      const PatchGeometry& geometry, int max_iters, uint64_t seed,
                      std::vector<double>* mse_per_iter = nullptr);

TokenGrid encode(const Frame& frame, const Codebook& codebook);
Frame decode(const TokenGrid& tokens, const Codebook& codebook);

// Reconstructs a frame directly from a feature grid (d x d patch features,
// bilinearly upsampled to p x p). decode() is render_features over centroid
// lookups; the baseline delta codec renders its feature state through the
// same path.
Frame render_features(const FeatureGrid& features, const PatchGeometry& geometry);

void save_codebook(const Codebook& cb, const std::string& path);
Codebook load_codebook(const std::string& path);

}  // namespace tokcast
