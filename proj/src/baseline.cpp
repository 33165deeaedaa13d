#include "tokcast/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace tokcast {

FeatureBytes quantize_features(const FeatureGrid& features) {
    FeatureBytes out(features.size());
    for (size_t i = 0; i < features.size(); ++i)
        out[i] = static_cast<uint8_t>(std::clamp(std::lround(features[i]), 0L, 255L));
    return out;
}

EncodedFrame delta_encode(const FeatureBytes& features, BaselineSenderState& sender,
                          const DeltaCodecConfig& cfg, bool force_key) {
    const int C = cfg.geometry.channels();
    const int cells = cfg.geometry.cells();
    if (features.size() != static_cast<size_t>(cells) * C)
        throw std::invalid_argument("delta_encode: feature size mismatch");

    const bool key = force_key || sender.reference.empty() ||
                     sender.frames_encoded % cfg.keyframe_interval == 0;
    ++sender.frames_encoded;

    EncodedFrame out;
    if (key) {
        out.kind = FrameKind::Key;
        out.payload = features;
        sender.reference = features;
        return out;
    }

    out.kind = FrameKind::Delta;
    const double tau_sq = cfg.change_threshold * cfg.change_threshold;
    for (int cell = 0; cell < cells; ++cell) {
        const uint8_t* cur = features.data() + static_cast<size_t>(cell) * C;
        uint8_t* ref = sender.reference.data() + static_cast<size_t>(cell) * C;
        double dist = 0.0;
        for (int c = 0; c < C; ++c) {
            double diff = static_cast<double>(cur[c]) - ref[c];
            dist += diff * diff;
        }
        if (dist > tau_sq) {
            out.payload.push_back(static_cast<uint8_t>(cell & 0xFF));
            out.payload.push_back(static_cast<uint8_t>(cell >> 8));
            out.payload.insert(out.payload.end(), cur, cur + C);
            std::memcpy(ref, cur, static_cast<size_t>(C));
        }
    }
    return out;
}

std::optional<FeatureBytes> delta_decode(const std::vector<uint8_t>& payload, FrameKind kind,
                                         BaselineReceiverState& receiver,
                                         const DeltaCodecConfig& cfg) {
    const int C = cfg.geometry.channels();
    const size_t full = static_cast<size_t>(cfg.geometry.cells()) * C;

    if (kind == FrameKind::Key) {
        if (payload.size() != full) throw std::runtime_error("delta_decode: bad keyframe length");
        receiver.reference = payload;
        receiver.chain_intact = true;
        return receiver.reference;
    }
    if (!receiver.chain_intact) return std::nullopt;
    if (payload.size() % (2 + static_cast<size_t>(C)) != 0)
        throw std::runtime_error("delta_decode: malformed delta payload");

    for (size_t off = 0; off < payload.size(); off += 2 + static_cast<size_t>(C)) {
        int cell = payload[off] | (payload[off + 1] << 8);
        if (cell < 0 || cell >= cfg.geometry.cells())
            throw std::runtime_error("delta_decode: cell position out of range");
        std::memcpy(receiver.reference.data() + static_cast<size_t>(cell) * C, &payload[off + 2],
                    static_cast<size_t>(C));
    }
    return receiver.reference;
}

std::vector<uint8_t> serialize_shard_header(uint32_t frame_idx, int shard_idx, FrameKind kind) {
    if (shard_idx < 0 || shard_idx > 63)
        throw std::invalid_argument("shard header: index exceeds 6-bit field");
    uint32_t word = ((frame_idx % (1u << 20)) << 12) |
                    (static_cast<uint32_t>(shard_idx) << 6) |
                    (static_cast<uint32_t>(kind) << 4);
    return {static_cast<uint8_t>(word >> 24), static_cast<uint8_t>(word >> 16),
            static_cast<uint8_t>(word >> 8), static_cast<uint8_t>(word)};
}

void parse_shard_header(const std::vector<uint8_t>& bytes, uint32_t* frame_idx, int* shard_idx,
                        FrameKind* kind) {
    if (bytes.size() < 4) throw std::runtime_error("shard header: short buffer");
    uint32_t word = (static_cast<uint32_t>(bytes[0]) << 24) |
                    (static_cast<uint32_t>(bytes[1]) << 16) |
                    (static_cast<uint32_t>(bytes[2]) << 8) | bytes[3];
    *frame_idx = word >> 12;
    *shard_idx = static_cast<int>((word >> 6) & 0x3F);
    *kind = static_cast<FrameKind>((word >> 4) & 0x3);
}

BaselineSession::BaselineSession(const DeltaCodecConfig& cfg, const ChannelConfig& channel,
                                 double frame_period_ms, double playout_delay_ms,
                                 double ack_loss_prob, uint64_t ack_seed)
    : cfg_(cfg),
      channel_(channel),
      frame_period_ms_(frame_period_ms),
      playout_delay_ms_(playout_delay_ms),
      // keyframe-force timeout: RTT plus two frame periods
      ack_timeout_ms_(2.0 * ack_delay_ms_ + 2.0 * frame_period_ms),
      ack_loss_prob_(ack_loss_prob),
      ack_rng_(ack_seed) {}

BaselineFrameResult BaselineSession::step(const FeatureBytes& features, uint32_t frame_idx,
                                          double t_ms) {
    // deliver pending ACKs
    while (!acks_in_flight_.empty() && acks_in_flight_.front().first <= t_ms) {
        int64_t acked = acks_in_flight_.front().second;
        acks_in_flight_.pop_front();
        if (acked > sender_.last_acked_frame) {
            sender_.last_acked_frame = acked;
            sender_.last_ack_progress_ms = t_ms;
        }
    }
    const bool force = sender_.force_key ||
                       (t_ms - sender_.last_ack_progress_ms > ack_timeout_ms_);
    if (force) sender_.last_ack_progress_ms = t_ms;  // back off until the next timeout
    sender_.force_key = false;

    EncodedFrame enc = delta_encode(features, sender_, cfg_, force);

    // length-prefix the payload so the receiver can strip shard padding
    std::vector<uint8_t> framed(4);
    uint32_t len = static_cast<uint32_t>(enc.payload.size());
    framed[0] = static_cast<uint8_t>(len);
    framed[1] = static_cast<uint8_t>(len >> 8);
    framed[2] = static_cast<uint8_t>(len >> 16);
    framed[3] = static_cast<uint8_t>(len >> 24);
    framed.insert(framed.end(), enc.payload.begin(), enc.payload.end());

    const size_t shard_payload = static_cast<size_t>(cfg_.mtu_bytes) - 4;
    const int k = static_cast<int>((framed.size() + shard_payload - 1) / shard_payload);
    framed.resize(static_cast<size_t>(k) * shard_payload, 0);

    std::vector<Shard> data(static_cast<size_t>(k));
    for (int i = 0; i < k; ++i)
        data[static_cast<size_t>(i)].assign(framed.begin() + static_cast<long>(i * shard_payload),
                                            framed.begin() + static_cast<long>((i + 1) * shard_payload));
    const int p = static_cast<int>(std::ceil(cfg_.parity_overhead * k));
    std::vector<Shard> parity = rs_encode(data, p);

    BaselineFrameResult res;
    res.kind = enc.kind;
    res.shards_sent = k + p;

    const double deadline = t_ms + playout_delay_ms_;
    std::vector<IndexedShard> arrived;
    auto send_shard = [&](int idx, const Shard& bytes) {
        res.bytes_sent += 4 + bytes.size();
        auto deliver = channel_.transmit(4 + bytes.size(), t_ms, frame_idx);
        if (deliver && *deliver <= deadline)
            arrived.push_back({idx, bytes});
        else
            ++res.shards_lost;
    };
    for (int i = 0; i < k; ++i) send_shard(i, data[static_cast<size_t>(i)]);
    for (int i = 0; i < p; ++i) send_shard(k + i, parity[static_cast<size_t>(i)]);

    // receiver at the deadline: RS then delta decode
    auto recovered = rs_decode(arrived, k, shard_payload);
    if (recovered) {
        std::vector<uint8_t> joined;
        for (const auto& s : *recovered) joined.insert(joined.end(), s.begin(), s.end());
        uint32_t plen = joined[0] | (joined[1] << 8) | (static_cast<uint32_t>(joined[2]) << 16) |
                        (static_cast<uint32_t>(joined[3]) << 24);
        std::vector<uint8_t> payload(joined.begin() + 4, joined.begin() + 4 + plen);
        auto decoded = delta_decode(payload, enc.kind, receiver_, cfg_);
        if (decoded) {
            res.decodable = true;
            res.rendered = true;
            res.decoded = std::move(decoded);
            // ACK over the reverse channel
            if (ack_loss_prob_ <= 0.0 || ack_rng_.next_unit() >= ack_loss_prob_)
                acks_in_flight_.emplace_back(deadline + ack_delay_ms_,
                                             static_cast<int64_t>(frame_idx));
        } else {
            receiver_.chain_intact = false;
        }
    } else {
        receiver_.chain_intact = false;
    }
    return res;
}

}  // namespace tokcast
