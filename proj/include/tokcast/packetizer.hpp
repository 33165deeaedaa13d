#pragma once

#include <cstdint>
#include <vector>

#include "tokcast/vq_codec.hpp"

namespace tokcast {

// Wire format v1: header is one 32-bit big-endian word laid out as
// [frame index:20 | packet index:2 | token count:10], followed by the
// surviving token indices bit-packed MSB-first and zero-padded to a byte
// boundary. Frame indices wrap mod 2^20.
inline constexpr uint32_t kFrameIndexModulus = 1u << 20;
inline constexpr int kMaxTokensPerPacket = 1023;

struct PacketLayout {
    int pr = 2;
    int pc = 2;

    int packet_count() const { return pr * pc; }
    bool divides(const PatchGeometry& g) const { return g.h % pr == 0 && g.w % pc == 0; }
    // tokens per packet before self-drop
    int tokens_per_packet(const PatchGeometry& g) const { return (g.h / pr) * (g.w / pc); }
};

struct Packet {
    uint32_t frame_idx = 0;  // already reduced mod 2^20
    uint8_t pkt_idx = 0;
    std::vector<uint16_t> tokens;  // surviving indices, in packetization order
};

inline constexpr uint16_t MISSING = 0xFFFF;

struct MaskedTokenGrid {
    PatchGeometry geometry;
    std::vector<uint16_t> entries;  // token index or MISSING

    MaskedTokenGrid() = default;
    explicit MaskedTokenGrid(const PatchGeometry& g)
        : geometry(g), entries(static_cast<size_t>(g.cells()), MISSING) {}
    explicit MaskedTokenGrid(const TokenGrid& g) : geometry(g.geometry), entries(g.entries) {}

    uint16_t& at(int i, int j) { return entries[static_cast<size_t>(i) * geometry.w + j]; }
    uint16_t at(int i, int j) const { return entries[static_cast<size_t>(i) * geometry.w + j]; }
    bool missing(int i, int j) const { return at(i, j) == MISSING; }
    size_t missing_count() const;
};

// Grid cell (i, j) goes to packet pc*(i mod pr) + (j mod pc); within a
// packet tokens are ordered by ascending (i, j).
int packet_index_for_cell(int i, int j, const PacketLayout& layout);

// In-packet position -> grid cell, for a given packet index.
std::pair<int, int> cell_for_packet_position(int pkt_idx, int pos, const PacketLayout& layout,
                                             const PatchGeometry& geometry);

std::vector<Packet> packetize(const TokenGrid& tokens, uint32_t frame_idx,
                              const PacketLayout& layout);

std::vector<uint8_t> serialize_packet(const Packet& packet, int bits_per_index);
Packet parse_packet(const std::vector<uint8_t>& bytes, int bits_per_index);

// Serialized size of a packet carrying s tokens.
inline size_t packet_wire_size(int s, int bits_per_index) {
    return 4 + (static_cast<size_t>(s) * bits_per_index + 7) / 8;
}

struct ReceivedPacket {
    Packet packet;
    std::vector<int> survivor_positions;  // in-packet positions, ascending
};

// Writes each packet's tokens to its survivor positions; everything else is
// MISSING (lost packets and self-dropped tokens alike). Duplicate packet
// indices keep the first copy.
MaskedTokenGrid depacketize(const std::vector<ReceivedPacket>& received,
                            const PacketLayout& layout, const PatchGeometry& geometry);

}  // namespace tokcast
