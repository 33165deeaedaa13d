#include "tokcast/vq_codec.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include "tokcast/prng.hpp"

namespace tokcast {

int Codebook::bits_per_index() const {
    int bits = 1;
    while ((1 << bits) < entry_count) ++bits;
    return bits;
}

FeatureGrid extract_features(const Frame& frame, const PatchGeometry& geometry) {
    geometry.validate();
    if (frame.meta.width != geometry.frame_width() || frame.meta.height != geometry.frame_height())
        throw std::invalid_argument("extract_features: frame does not match geometry");

    const int C = geometry.channels();
    const int d = geometry.d, p = geometry.p;
    const int block = p / d;
    FeatureGrid out(static_cast<size_t>(geometry.cells()) * C, 0.0f);

    for (int i = 0; i < geometry.h; ++i) {
        for (int j = 0; j < geometry.w; ++j) {
            float* feat = out.data() + (static_cast<size_t>(i) * geometry.w + j) * C;
            for (int c = 0; c < 3; ++c) {
                for (int dy = 0; dy < d; ++dy) {
                    for (int dx = 0; dx < d; ++dx) {
                        double sum = 0.0;
                        for (int y = 0; y < block; ++y)
                            for (int x = 0; x < block; ++x)
                                sum += frame.at(i * p + dy * block + y, j * p + dx * block + x, c);
                        feat[c * d * d + dy * d + dx] =
                            static_cast<float>(sum / (block * block));
                    }
                }
            }
        }
    }
    return out;
}

namespace {

double sq_dist(const float* a, const float* b, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        double diff = static_cast<double>(a[i]) - b[i];
        s += diff * diff;
    }
    return s;
}

int nearest_centroid(const float* feat, const Codebook& cb) {
    const int C = cb.channels();
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int n = 0; n < cb.entry_count; ++n) {
        double dist = sq_dist(feat, cb.centroid(n), C);
        if (dist < best_d) {  // ties keep the lower index
            best_d = dist;
            best = n;
        }
    }
    return best;
}

}  // namespace

Codebook fit_codebook(const std::vector<Frame>& frames, int entry_count,
                      const PatchGeometry& geometry, int max_iters, uint64_t seed,
                      std::vector<double>* mse_per_iter) {
    if (entry_count < 2) throw std::invalid_argument("fit_codebook: N must be >= 2");
    if (max_iters < 1) throw std::invalid_argument("fit_codebook: max_iters must be >= 1");

    const int C = geometry.channels();
    std::vector<float> feats;
    for (const auto& f : frames) {
        FeatureGrid g = extract_features(f, geometry);
        feats.insert(feats.end(), g.begin(), g.end());
    }
    const size_t count = feats.size() / C;
    if (count < static_cast<size_t>(entry_count))
        throw std::runtime_error("fit_codebook: insufficient-diversity");

    auto feat = [&](size_t i) { return feats.data() + i * C; };

    // Distinct-feature check via string keys of the raw float bytes.
    std::unordered_set<std::string> distinct;
    for (size_t i = 0; i < count && distinct.size() < static_cast<size_t>(entry_count); ++i)
        distinct.emplace(reinterpret_cast<const char*>(feat(i)), sizeof(float) * C);
    if (distinct.size() < static_cast<size_t>(entry_count))
        throw std::runtime_error("fit_codebook: insufficient-diversity");

    Codebook cb;
    cb.entry_count = entry_count;
    cb.geometry = geometry;
    cb.centroids.resize(static_cast<size_t>(entry_count) * C);
    if (cb.bits_per_index() > 16)
        throw std::invalid_argument("fit_codebook: N too large for 16-bit indices");

    // Init: N distinct features sampled with the repo PRNG.
    Prng rng(seed);
    std::unordered_set<std::string> chosen;
    int placed = 0;
    while (placed < entry_count) {
        size_t i = rng.next_below(count);
        std::string key(reinterpret_cast<const char*>(feat(i)), sizeof(float) * C);
        if (!chosen.insert(std::move(key)).second) continue;
        std::copy(feat(i), feat(i) + C, cb.centroids.begin() + static_cast<size_t>(placed) * C);
        ++placed;
    }

    std::vector<int> assign(count, -1);
    std::vector<double> sums(static_cast<size_t>(entry_count) * C);
    std::vector<size_t> sizes(static_cast<size_t>(entry_count));
    std::vector<double> dists(count);

    for (int iter = 0; iter < max_iters; ++iter) {
        bool changed = false;
        double sse = 0.0;
        for (size_t i = 0; i < count; ++i) {
            int n = nearest_centroid(feat(i), cb);
            dists[i] = sq_dist(feat(i), cb.centroid(n), C);
            sse += dists[i];
            if (n != assign[i]) {
                assign[i] = n;
                changed = true;
            }
        }
        if (mse_per_iter) mse_per_iter->push_back(sse / (static_cast<double>(count) * C));
        if (!changed) break;

        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(sizes.begin(), sizes.end(), 0);
        for (size_t i = 0; i < count; ++i) {
            double* s = sums.data() + static_cast<size_t>(assign[i]) * C;
            const float* fp = feat(i);
            for (int c = 0; c < C; ++c) s[c] += fp[c];
            ++sizes[static_cast<size_t>(assign[i])];
        }
        for (int n = 0; n < entry_count; ++n) {
            if (sizes[static_cast<size_t>(n)] == 0) {
                // Reseed an empty cluster to the globally farthest feature.
                size_t far = static_cast<size_t>(
                    std::max_element(dists.begin(), dists.end()) - dists.begin());
                std::copy(feat(far), feat(far) + C,
                          cb.centroids.begin() + static_cast<size_t>(n) * C);
                dists[far] = 0.0;
                continue;
            }
            float* cent = cb.centroids.data() + static_cast<size_t>(n) * C;
            const double* s = sums.data() + static_cast<size_t>(n) * C;
            for (int c = 0; c < C; ++c)
                cent[c] = static_cast<float>(s[c] / static_cast<double>(sizes[static_cast<size_t>(n)]));
        }
    }

    // Most frequent token over the training corpus, for static fill.
    std::vector<size_t> freq(static_cast<size_t>(entry_count), 0);
    for (size_t i = 0; i < count; ++i) ++freq[static_cast<size_t>(nearest_centroid(feat(i), cb))];
    cb.static_fill_token = static_cast<uint16_t>(
        std::max_element(freq.begin(), freq.end()) - freq.begin());
    return cb;
}

TokenGrid encode(const Frame& frame, const Codebook& codebook) {
    FeatureGrid feats = extract_features(frame, codebook.geometry);
    const int C = codebook.channels();
    TokenGrid grid(codebook.geometry);
    for (int cell = 0; cell < codebook.geometry.cells(); ++cell)
        grid.entries[static_cast<size_t>(cell)] = static_cast<uint16_t>(
            nearest_centroid(feats.data() + static_cast<size_t>(cell) * C, codebook));
    return grid;
}

Frame render_features(const FeatureGrid& features, const PatchGeometry& geometry) {
    geometry.validate();
    const int C = geometry.channels();
    if (features.size() != static_cast<size_t>(geometry.cells()) * C)
        throw std::invalid_argument("render_features: size mismatch");

    VideoMeta meta{geometry.frame_width(), geometry.frame_height(), 30, 1, Colorspace::RGB24};
    Frame out(meta, 0);
    const int d = geometry.d, p = geometry.p;
    const double scale = static_cast<double>(d) / p;

    // Precompute the bilinear taps for one patch axis.
    std::vector<int> lo(static_cast<size_t>(p)), hi(static_cast<size_t>(p));
    std::vector<double> frac(static_cast<size_t>(p));
    for (int t = 0; t < p; ++t) {
        double src = (t + 0.5) * scale - 0.5;
        src = std::clamp(src, 0.0, static_cast<double>(d - 1));
        lo[static_cast<size_t>(t)] = static_cast<int>(std::floor(src));
        hi[static_cast<size_t>(t)] = std::min(lo[static_cast<size_t>(t)] + 1, d - 1);
        frac[static_cast<size_t>(t)] = src - lo[static_cast<size_t>(t)];
    }

    for (int i = 0; i < geometry.h; ++i) {
        for (int j = 0; j < geometry.w; ++j) {
            const float* feat = features.data() + (static_cast<size_t>(i) * geometry.w + j) * C;
            for (int c = 0; c < 3; ++c) {
                const float* plane = feat + c * d * d;
                for (int py = 0; py < p; ++py) {
                    for (int px = 0; px < p; ++px) {
                        double v00 = plane[lo[py] * d + lo[px]];
                        double v01 = plane[lo[py] * d + hi[px]];
                        double v10 = plane[hi[py] * d + lo[px]];
                        double v11 = plane[hi[py] * d + hi[px]];
                        double top = v00 + (v01 - v00) * frac[px];
                        double bot = v10 + (v11 - v10) * frac[px];
                        double v = top + (bot - top) * frac[py];
                        // round half away from zero, clamp
                        long r = std::lround(v);
                        out.at(i * p + py, j * p + px, c) =
                            static_cast<uint8_t>(std::clamp(r, 0L, 255L));
                    }
                }
            }
        }
    }
    return out;
}

Frame decode(const TokenGrid& tokens, const Codebook& codebook) {
    if (!(tokens.geometry == codebook.geometry))
        throw std::invalid_argument("decode: geometry mismatch");
    const int C = codebook.channels();
    FeatureGrid feats(static_cast<size_t>(codebook.geometry.cells()) * C);
    for (int cell = 0; cell < codebook.geometry.cells(); ++cell) {
        uint16_t tok = tokens.entries[static_cast<size_t>(cell)];
        if (tok >= codebook.entry_count)
            throw std::out_of_range("decode: token index out of range");
        std::copy(codebook.centroid(tok), codebook.centroid(tok) + C,
                  feats.begin() + static_cast<size_t>(cell) * C);
    }
    return render_features(feats, codebook.geometry);
}

namespace {

template <typename T>
void put(std::ofstream& out, T v) {
    uint8_t buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

}  // namespace

void save_codebook(const Codebook& cb, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_codebook: cannot create " + path);
    out.write("TCBK", 4);
    put<uint16_t>(out, 1);
    put<uint32_t>(out, static_cast<uint32_t>(cb.entry_count));
    put<uint32_t>(out, static_cast<uint32_t>(cb.channels()));
    put<uint16_t>(out, static_cast<uint16_t>(cb.geometry.h));
    put<uint16_t>(out, static_cast<uint16_t>(cb.geometry.w));
    put<uint16_t>(out, static_cast<uint16_t>(cb.geometry.p));
    put<uint16_t>(out, static_cast<uint16_t>(cb.geometry.d));
    out.write(reinterpret_cast<const char*>(cb.centroids.data()),
              static_cast<std::streamsize>(cb.centroids.size() * sizeof(float)));
    // trailer: most frequent training token (consumed by static fill)
    put<uint32_t>(out, cb.static_fill_token);
    if (!out) throw std::runtime_error("save_codebook: write failed");
}

Codebook load_codebook(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_codebook: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != "TCBK")
        throw std::runtime_error("load_codebook: bad magic");
    uint16_t version = get<uint16_t>(in);
    if (version != 1) throw std::runtime_error("load_codebook: unsupported version");
    Codebook cb;
    cb.entry_count = static_cast<int>(get<uint32_t>(in));
    uint32_t channels = get<uint32_t>(in);
    cb.geometry.h = get<uint16_t>(in);
    cb.geometry.w = get<uint16_t>(in);
    cb.geometry.p = get<uint16_t>(in);
    cb.geometry.d = get<uint16_t>(in);
    cb.geometry.validate();
    if (channels != static_cast<uint32_t>(cb.channels()))
        throw std::runtime_error("load_codebook: channel count inconsistent with geometry");
    cb.centroids.resize(static_cast<size_t>(cb.entry_count) * cb.channels());
    in.read(reinterpret_cast<char*>(cb.centroids.data()),
            static_cast<std::streamsize>(cb.centroids.size() * sizeof(float)));
    if (!in) throw std::runtime_error("load_codebook: truncated centroid table");
    uint32_t fill = get<uint32_t>(in);
    cb.static_fill_token = in ? static_cast<uint16_t>(fill) : 0;
    return cb;
}

}  // namespace tokcast
