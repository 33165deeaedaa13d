#include "tokcast/packetizer.hpp"

#include <algorithm>
#include <stdexcept>

namespace tokcast {

size_t MaskedTokenGrid::missing_count() const {
    return static_cast<size_t>(std::count(entries.begin(), entries.end(), MISSING));
}

int packet_index_for_cell(int i, int j, const PacketLayout& layout) {
    return layout.pc * (i % layout.pr) + (j % layout.pc);
}

std::pair<int, int> cell_for_packet_position(int pkt_idx, int pos, const PacketLayout& layout,
                                             const PatchGeometry& geometry) {
    const int cols = geometry.w / layout.pc;  // cells per packet row
    const int ri = pkt_idx / layout.pc;       // row residue
    const int rj = pkt_idx % layout.pc;       // column residue
    const int i = (pos / cols) * layout.pr + ri;
    const int j = (pos % cols) * layout.pc + rj;
    return {i, j};
}

std::vector<Packet> packetize(const TokenGrid& tokens, uint32_t frame_idx,
                              const PacketLayout& layout) {
    const PatchGeometry& g = tokens.geometry;
    if (!layout.divides(g))
        throw std::invalid_argument("packetize: layout does not divide grid");
    if (layout.packet_count() > 4)
        throw std::invalid_argument("packetize: more than 4 packets unsupported in wire v1");

    std::vector<Packet> out(static_cast<size_t>(layout.packet_count()));
    for (int p = 0; p < layout.packet_count(); ++p) {
        out[static_cast<size_t>(p)].frame_idx = frame_idx % kFrameIndexModulus;
        out[static_cast<size_t>(p)].pkt_idx = static_cast<uint8_t>(p);
        out[static_cast<size_t>(p)].tokens.reserve(static_cast<size_t>(layout.tokens_per_packet(g)));
    }
    // Ascending (i, j) scan appends tokens in the required in-packet order.
    for (int i = 0; i < g.h; ++i)
        for (int j = 0; j < g.w; ++j)
            out[static_cast<size_t>(packet_index_for_cell(i, j, layout))].tokens.push_back(
                tokens.at(i, j));
    return out;
}

std::vector<uint8_t> serialize_packet(const Packet& packet, int bits_per_index) {
    const size_t s = packet.tokens.size();
    if (s > kMaxTokensPerPacket)
        throw std::invalid_argument("serialize_packet: token count exceeds 10-bit field");
    if (bits_per_index < 1 || bits_per_index > 16)
        throw std::invalid_argument("serialize_packet: bad bits_per_index");

    uint32_t header = ((packet.frame_idx % kFrameIndexModulus) << 12) |
                      (static_cast<uint32_t>(packet.pkt_idx & 0x3) << 10) |
                      static_cast<uint32_t>(s);
    std::vector<uint8_t> out(packet_wire_size(static_cast<int>(s), bits_per_index), 0);
    out[0] = static_cast<uint8_t>(header >> 24);
    out[1] = static_cast<uint8_t>(header >> 16);
    out[2] = static_cast<uint8_t>(header >> 8);
    out[3] = static_cast<uint8_t>(header);

    size_t bit = 0;
    const uint32_t limit = 1u << bits_per_index;
    for (uint16_t tok : packet.tokens) {
        if (tok >= limit) throw std::invalid_argument("serialize_packet: index overflow");
        for (int b = bits_per_index - 1; b >= 0; --b) {
            if ((tok >> b) & 1) out[4 + bit / 8] |= static_cast<uint8_t>(0x80u >> (bit % 8));
            ++bit;
        }
    }
    return out;
}

Packet parse_packet(const std::vector<uint8_t>& bytes, int bits_per_index) {
    if (bytes.size() < 4) throw std::runtime_error("parse_packet: short buffer");
    uint32_t header = (static_cast<uint32_t>(bytes[0]) << 24) |
                      (static_cast<uint32_t>(bytes[1]) << 16) |
                      (static_cast<uint32_t>(bytes[2]) << 8) | bytes[3];
    Packet p;
    p.frame_idx = header >> 12;
    p.pkt_idx = static_cast<uint8_t>((header >> 10) & 0x3);
    const int s = static_cast<int>(header & 0x3FF);
    if (bytes.size() != packet_wire_size(s, bits_per_index))
        throw std::runtime_error("parse_packet: length inconsistent with header token count");

    p.tokens.resize(static_cast<size_t>(s));
    size_t bit = 0;
    for (int t = 0; t < s; ++t) {
        uint16_t v = 0;
        for (int b = 0; b < bits_per_index; ++b) {
            v = static_cast<uint16_t>(v << 1);
            if (bytes[4 + bit / 8] & (0x80u >> (bit % 8))) v |= 1;
            ++bit;
        }
        p.tokens[static_cast<size_t>(t)] = v;
    }
    return p;
}

MaskedTokenGrid depacketize(const std::vector<ReceivedPacket>& received,
                            const PacketLayout& layout, const PatchGeometry& geometry) {
    if (!layout.divides(geometry))
        throw std::invalid_argument("depacketize: layout does not divide grid");

    MaskedTokenGrid grid(geometry);
    std::vector<bool> seen(static_cast<size_t>(layout.packet_count()), false);
    for (const auto& rp : received) {
        const Packet& pkt = rp.packet;
        if (pkt.pkt_idx >= layout.packet_count())
            throw std::invalid_argument("depacketize: packet index out of layout");
        if (seen[pkt.pkt_idx]) continue;  // duplicate, keep first
        seen[pkt.pkt_idx] = true;
        if (rp.survivor_positions.size() != pkt.tokens.size())
            throw std::invalid_argument("depacketize: survivor count mismatch");
        for (size_t t = 0; t < pkt.tokens.size(); ++t) {
            auto [i, j] = cell_for_packet_position(pkt.pkt_idx, rp.survivor_positions[t], layout,
                                                   geometry);
            grid.at(i, j) = pkt.tokens[t];
        }
    }
    return grid;
}

}  // namespace tokcast
