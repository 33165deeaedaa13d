#pragma once

#include <cstdint>
#include <vector>

#include "tokcast/packetizer.hpp"

namespace tokcast {

// Seeded, receiver-recoverable self-dropping. The drop positions for a
// packet are a pure function of (frame index, packet index, m, d): both
// ends replay the same partial Fisher-Yates shuffle seeded with
// 4*frame_idx + pkt_idx, so the survivor set travels for free in the
// header's token count.

struct DropPlan {
    uint32_t frame_idx = 0;
    int per_packet_drop = 0;  // d, identical across all packets of a frame
    std::vector<std::vector<int>> dropped;  // per packet, sorted ascending
};

struct BitrateDecision {
    double drop_ratio = 0.0;  // r_d = d/m
    int per_packet_drop = 0;
    double achieved_bps = 0.0;
};

// Full-rate bitrate of a session: P * wire_size(m) * 8 * fps.
double full_rate_bps(const PacketLayout& layout, const PatchGeometry& geometry,
                     int bits_per_index, double fps);

// Smallest per-packet drop count whose resulting bitrate is <= target.
// Throws if that would require dropping more than half the tokens.
BitrateDecision drop_ratio_for_target(double target_bps, const PacketLayout& layout,
                                      const PatchGeometry& geometry, int bits_per_index,
                                      double fps);

// Sorted set of d in-packet positions to drop, seeded with
// 4*frame_idx + pkt_idx.
std::vector<int> select_drops(uint32_t frame_idx, int pkt_idx, int m, int d);

// Removes the dropped positions from a full packet (s = m), preserving the
// order of the survivors.
Packet apply_self_drop(const Packet& packet, const std::vector<int>& drop_set);

// Receiver side: complement of select_drops(frame, pkt, m, m - s).
std::vector<int> recover_survivor_positions(uint32_t frame_idx, int pkt_idx, int m, int s);

DropPlan make_drop_plan(uint32_t frame_idx, const PacketLayout& layout,
                        const PatchGeometry& geometry, int per_packet_drop);

}  // namespace tokcast
