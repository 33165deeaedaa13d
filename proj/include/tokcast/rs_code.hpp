#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace tokcast {

// GF(256) arithmetic with the 0x11D reduction polynomial.
namespace gf256 {
uint8_t add(uint8_t a, uint8_t b);
uint8_t mul(uint8_t a, uint8_t b);
uint8_t inv(uint8_t a);
}  // namespace gf256

using Shard = std::vector<uint8_t>;

// Systematic (k, k+p) erasure code: the generator matrix is a Vandermonde
// matrix normalized so rows 0..k-1 are the identity. Any k of the k+p
// shards reconstruct the data exactly.
std::vector<Shard> rs_encode(const std::vector<Shard>& data_shards, int parity_count);

struct IndexedShard {
    int index;  // 0..k-1 data, k..k+p-1 parity
    Shard bytes;
};

// Returns the k data shards, or nullopt when fewer than k shards arrived.
std::optional<std::vector<Shard>> rs_decode(const std::vector<IndexedShard>& received, int k,
                                            size_t shard_len);

}  // namespace tokcast
