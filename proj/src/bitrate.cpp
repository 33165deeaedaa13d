#include "tokcast/bitrate.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "tokcast/prng.hpp"

namespace tokcast {

double full_rate_bps(const PacketLayout& layout, const PatchGeometry& geometry,
                     int bits_per_index, double fps) {
    const int m = layout.tokens_per_packet(geometry);
    return static_cast<double>(layout.packet_count()) *
           static_cast<double>(packet_wire_size(m, bits_per_index)) * 8.0 * fps;
}

BitrateDecision drop_ratio_for_target(double target_bps, const PacketLayout& layout,
                                      const PatchGeometry& geometry, int bits_per_index,
                                      double fps) {
    if (target_bps <= 0) throw std::invalid_argument("drop_ratio_for_target: target must be > 0");
    const int m = layout.tokens_per_packet(geometry);
    const double per_byte = static_cast<double>(layout.packet_count()) * 8.0 * fps;

    auto rate_at = [&](int d) {
        return per_byte * static_cast<double>(packet_wire_size(m - d, bits_per_index));
    };

    BitrateDecision out;
    if (rate_at(0) <= target_bps) {
        out.achieved_bps = rate_at(0);
        return out;
    }
    for (int d = 1; d <= m; ++d) {
        if (rate_at(d) <= target_bps) {
            if (2 * d > m)
                throw std::runtime_error(
                    "drop_ratio_for_target: target-unreachable (requires r_d > 0.5; "
                    "select a smaller codec variant)");
            out.per_packet_drop = d;
            out.drop_ratio = static_cast<double>(d) / m;
            out.achieved_bps = rate_at(d);
            return out;
        }
    }
    throw std::runtime_error("drop_ratio_for_target: target-unreachable");
}

std::vector<int> select_drops(uint32_t frame_idx, int pkt_idx, int m, int d) {
    if (d < 0 || d > m || m > kMaxTokensPerPacket)
        throw std::invalid_argument("select_drops: bad d or m");

    Prng rng(4ull * frame_idx + static_cast<uint64_t>(pkt_idx));
    std::vector<int> slots(static_cast<size_t>(m));
    std::iota(slots.begin(), slots.end(), 0);
    // partial Fisher-Yates: the first d slots become the dropped set
    for (int t = 0; t < d; ++t) {
        int j = t + static_cast<int>(rng.next_below(static_cast<uint64_t>(m - t)));
        std::swap(slots[static_cast<size_t>(t)], slots[static_cast<size_t>(j)]);
    }
    std::vector<int> dropped(slots.begin(), slots.begin() + d);
    std::sort(dropped.begin(), dropped.end());
    return dropped;
}

Packet apply_self_drop(const Packet& packet, const std::vector<int>& drop_set) {
    const int m = static_cast<int>(packet.tokens.size());
    std::vector<bool> drop(static_cast<size_t>(m), false);
    for (int pos : drop_set) {
        if (pos < 0 || pos >= m) throw std::invalid_argument("apply_self_drop: position out of range");
        drop[static_cast<size_t>(pos)] = true;
    }
    Packet out;
    out.frame_idx = packet.frame_idx;
    out.pkt_idx = packet.pkt_idx;
    out.tokens.reserve(static_cast<size_t>(m) - drop_set.size());
    for (int pos = 0; pos < m; ++pos)
        if (!drop[static_cast<size_t>(pos)]) out.tokens.push_back(packet.tokens[static_cast<size_t>(pos)]);
    return out;
}

std::vector<int> recover_survivor_positions(uint32_t frame_idx, int pkt_idx, int m, int s) {
    if (s < 0 || s > m) throw std::runtime_error("recover_survivor_positions: malformed-packet");
    std::vector<int> dropped = select_drops(frame_idx, pkt_idx, m, m - s);
    std::vector<bool> is_dropped(static_cast<size_t>(m), false);
    for (int pos : dropped) is_dropped[static_cast<size_t>(pos)] = true;
    std::vector<int> survivors;
    survivors.reserve(static_cast<size_t>(s));
    for (int pos = 0; pos < m; ++pos)
        if (!is_dropped[static_cast<size_t>(pos)]) survivors.push_back(pos);
    return survivors;
}

DropPlan make_drop_plan(uint32_t frame_idx, const PacketLayout& layout,
                        const PatchGeometry& geometry, int per_packet_drop) {
    DropPlan plan;
    plan.frame_idx = frame_idx % kFrameIndexModulus;
    plan.per_packet_drop = per_packet_drop;
    const int m = layout.tokens_per_packet(geometry);
    for (int p = 0; p < layout.packet_count(); ++p)
        plan.dropped.push_back(select_drops(plan.frame_idx, p, m, per_packet_drop));
    return plan;
}

}  // namespace tokcast
