#include "tokcast/rs_code.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

namespace tokcast {

namespace gf256 {

namespace {

struct Tables {
    std::array<uint8_t, 512> exp{};
    std::array<int, 256> log{};

    Tables() {
        int x = 1;
        for (int i = 0; i < 255; ++i) {
            exp[static_cast<size_t>(i)] = static_cast<uint8_t>(x);
            log[static_cast<size_t>(x)] = i;
            x <<= 1;
            if (x & 0x100) x ^= 0x11D;
        }
        for (int i = 255; i < 512; ++i) exp[static_cast<size_t>(i)] = exp[static_cast<size_t>(i - 255)];
        log[0] = -1;
    }
};

const Tables& tables() {
    static const Tables t;
    return t;
}

}  // namespace

uint8_t add(uint8_t a, uint8_t b) { return a ^ b; }

uint8_t mul(uint8_t a, uint8_t b) {
    if (a == 0 || b == 0) return 0;
    const Tables& t = tables();
    return t.exp[static_cast<size_t>(t.log[a] + t.log[b])];
}

uint8_t inv(uint8_t a) {
    if (a == 0) throw std::domain_error("gf256: inverse of zero");
    const Tables& t = tables();
    return t.exp[static_cast<size_t>(255 - t.log[a])];
}

}  // namespace gf256

namespace {

using Matrix = std::vector<std::vector<uint8_t>>;

Matrix identity(int n) {
    Matrix m(static_cast<size_t>(n), std::vector<uint8_t>(static_cast<size_t>(n), 0));
    for (int i = 0; i < n; ++i) m[static_cast<size_t>(i)][static_cast<size_t>(i)] = 1;
    return m;
}

// Gauss-Jordan inverse over GF(256). Throws if singular.
Matrix invert(Matrix m) {
    const int n = static_cast<int>(m.size());
    Matrix inv = identity(n);
    for (int col = 0; col < n; ++col) {
        int pivot = -1;
        for (int r = col; r < n; ++r)
            if (m[static_cast<size_t>(r)][static_cast<size_t>(col)] != 0) {
                pivot = r;
                break;
            }
        if (pivot < 0) throw std::runtime_error("gf256 matrix: singular");
        std::swap(m[static_cast<size_t>(col)], m[static_cast<size_t>(pivot)]);
        std::swap(inv[static_cast<size_t>(col)], inv[static_cast<size_t>(pivot)]);

        uint8_t piv_inv = gf256::inv(m[static_cast<size_t>(col)][static_cast<size_t>(col)]);
        for (int c = 0; c < n; ++c) {
            m[static_cast<size_t>(col)][static_cast<size_t>(c)] =
                gf256::mul(m[static_cast<size_t>(col)][static_cast<size_t>(c)], piv_inv);
            inv[static_cast<size_t>(col)][static_cast<size_t>(c)] =
                gf256::mul(inv[static_cast<size_t>(col)][static_cast<size_t>(c)], piv_inv);
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            uint8_t factor = m[static_cast<size_t>(r)][static_cast<size_t>(col)];
            if (factor == 0) continue;
            for (int c = 0; c < n; ++c) {
                m[static_cast<size_t>(r)][static_cast<size_t>(c)] ^=
                    gf256::mul(factor, m[static_cast<size_t>(col)][static_cast<size_t>(c)]);
                inv[static_cast<size_t>(r)][static_cast<size_t>(c)] ^=
                    gf256::mul(factor, inv[static_cast<size_t>(col)][static_cast<size_t>(c)]);
            }
        }
    }
    return inv;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    const size_t rows = a.size(), inner = b.size(), cols = b[0].size();
    Matrix out(rows, std::vector<uint8_t>(cols, 0));
    for (size_t r = 0; r < rows; ++r)
        for (size_t i = 0; i < inner; ++i) {
            uint8_t av = a[r][i];
            if (av == 0) continue;
            for (size_t c = 0; c < cols; ++c)
                out[r][c] ^= gf256::mul(av, b[i][c]);
        }
    return out;
}

// Systematic generator: Vandermonde rows on distinct points 0..k+p-1,
// normalized by the inverse of its top k x k block. Every k x k submatrix
// stays invertible, which is what makes the code MDS.
Matrix systematic_generator(int k, int p) {
    Matrix v(static_cast<size_t>(k + p), std::vector<uint8_t>(static_cast<size_t>(k), 0));
    for (int r = 0; r < k + p; ++r) {
        uint8_t x = static_cast<uint8_t>(r);
        uint8_t pw = 1;
        for (int c = 0; c < k; ++c) {
            v[static_cast<size_t>(r)][static_cast<size_t>(c)] = pw;
            pw = gf256::mul(pw, x);
        }
    }
    Matrix top(v.begin(), v.begin() + k);
    return matmul(v, invert(top));
}

}  // namespace

std::vector<Shard> rs_encode(const std::vector<Shard>& data_shards, int parity_count) {
    const int k = static_cast<int>(data_shards.size());
    if (k == 0) throw std::invalid_argument("rs_encode: no data shards");
    if (parity_count < 0 || k + parity_count > 255)
        throw std::invalid_argument("rs_encode: k + p must be <= 255");
    const size_t len = data_shards[0].size();
    for (const auto& s : data_shards)
        if (s.size() != len) throw std::invalid_argument("rs_encode: unequal shard lengths");
    if (parity_count == 0) return {};

    Matrix gen = systematic_generator(k, parity_count);
    std::vector<Shard> parity(static_cast<size_t>(parity_count), Shard(len, 0));
    for (int pr = 0; pr < parity_count; ++pr) {
        const auto& row = gen[static_cast<size_t>(k + pr)];
        for (int c = 0; c < k; ++c) {
            uint8_t coef = row[static_cast<size_t>(c)];
            if (coef == 0) continue;
            const Shard& src = data_shards[static_cast<size_t>(c)];
            Shard& dst = parity[static_cast<size_t>(pr)];
            for (size_t b = 0; b < len; ++b) dst[b] ^= gf256::mul(coef, src[b]);
        }
    }
    return parity;
}

std::optional<std::vector<Shard>> rs_decode(const std::vector<IndexedShard>& received, int k,
                                            size_t shard_len) {
    for (const auto& s : received)
        if (s.bytes.size() != shard_len)
            throw std::invalid_argument("rs_decode: inconsistent shard lengths");

    if (static_cast<int>(received.size()) < k) return std::nullopt;

    // Fast path: all data shards present.
    std::vector<const Shard*> direct(static_cast<size_t>(k), nullptr);
    int have = 0;
    for (const auto& s : received)
        if (s.index < k && !direct[static_cast<size_t>(s.index)]) {
            direct[static_cast<size_t>(s.index)] = &s.bytes;
            ++have;
        }
    if (have == k) {
        std::vector<Shard> out;
        out.reserve(static_cast<size_t>(k));
        for (int i = 0; i < k; ++i) out.push_back(*direct[static_cast<size_t>(i)]);
        return out;
    }

    // Solve with the first k distinct received rows of the generator.
    int max_index = 0;
    for (const auto& s : received) max_index = std::max(max_index, s.index);
    if (max_index + 1 < k) return std::nullopt;  // fewer than k distinct indices
    Matrix gen = systematic_generator(k, max_index + 1 - k);

    Matrix rows;
    std::vector<const Shard*> srcs;
    std::vector<bool> used(static_cast<size_t>(max_index + 1), false);
    for (const auto& s : received) {
        if (used[static_cast<size_t>(s.index)]) continue;
        used[static_cast<size_t>(s.index)] = true;
        rows.push_back(gen[static_cast<size_t>(s.index)]);
        srcs.push_back(&s.bytes);
        if (static_cast<int>(rows.size()) == k) break;
    }
    if (static_cast<int>(rows.size()) < k) return std::nullopt;

    Matrix solve = invert(rows);
    std::vector<Shard> out(static_cast<size_t>(k), Shard(shard_len, 0));
    for (int r = 0; r < k; ++r)
        for (int c = 0; c < k; ++c) {
            uint8_t coef = solve[static_cast<size_t>(r)][static_cast<size_t>(c)];
            if (coef == 0) continue;
            const Shard& src = *srcs[static_cast<size_t>(c)];
            Shard& dst = out[static_cast<size_t>(r)];
            for (size_t b = 0; b < shard_len; ++b) dst[b] ^= gf256::mul(coef, src[b]);
        }
    return out;
}

}  // namespace tokcast
