#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "tokcast/channel.hpp"
#include "tokcast/rs_code.hpp"
#include "tokcast/vq_codec.hpp"

namespace tokcast {

// Simplified temporally-dependent codec (keyframe + delta frames) with
// per-frame block Reed-Solomon FEC and per-frame ACKs. This is the foil:
// it exhibits freeze propagation and keyframe bitrate spikes by design of
// its decode dependency chain.

enum class FrameKind : uint8_t { Delta = 0, Key = 1 };

struct DeltaCodecConfig {
    PatchGeometry geometry;        // features are 8-bit quantized pooled patches
    int keyframe_interval = 30;    // K
    double change_threshold = 8.0; // tau, L2 on a patch's feature bytes
    int mtu_bytes = 324;           // shard wire size incl. 4-byte header
    double parity_overhead = 0.5;  // rho, p = ceil(rho * k)
};

using FeatureBytes = std::vector<uint8_t>;  // h*w*C, 8-bit quantized

FeatureBytes quantize_features(const FeatureGrid& features);

struct EncodedFrame {
    FrameKind kind;
    std::vector<uint8_t> payload;
};

struct BaselineSenderState {
    FeatureBytes reference;  // mirror of the receiver's decoded state
    int64_t frames_encoded = 0;
    int64_t last_acked_frame = -1;
    double last_ack_progress_ms = 0.0;
    bool force_key = false;
};

struct BaselineReceiverState {
    FeatureBytes reference;
    bool chain_intact = false;  // true once a keyframe has been decoded
};

// Keyframe: all h*w*C feature bytes. Delta: (u16 LE cell position, C bytes)
// for every patch whose feature delta against the sender reference exceeds
// tau.
EncodedFrame delta_encode(const FeatureBytes& features, BaselineSenderState& sender,
                          const DeltaCodecConfig& cfg, bool force_key);

// Keyframes always decode and reset the chain; deltas decode only while the
// chain is intact.
std::optional<FeatureBytes> delta_decode(const std::vector<uint8_t>& payload, FrameKind kind,
                                         BaselineReceiverState& receiver,
                                         const DeltaCodecConfig& cfg);

// Shard wire format: one 32-bit big-endian word
// [frame:20 | shard index:6 | kind:2 | reserved:4] + shard bytes.
std::vector<uint8_t> serialize_shard_header(uint32_t frame_idx, int shard_idx, FrameKind kind);
void parse_shard_header(const std::vector<uint8_t>& bytes, uint32_t* frame_idx, int* shard_idx,
                        FrameKind* kind);

struct BaselineFrameResult {
    FrameKind kind = FrameKind::Delta;
    size_t bytes_sent = 0;
    int shards_sent = 0;
    int shards_lost = 0;
    bool decodable = false;
    bool rendered = false;
    std::optional<FeatureBytes> decoded;  // present when rendered
};

// Session loop for the baseline scheme: encode, shard + parity, transmit,
// decode at the frame deadline, ACK each decodable frame over a delayed
// (optionally lossy) reverse channel.
class BaselineSession {
public:
    BaselineSession(const DeltaCodecConfig& cfg, const ChannelConfig& channel,
                    double frame_period_ms, double playout_delay_ms, double ack_loss_prob = 0.0,
                    uint64_t ack_seed = 0);

    BaselineFrameResult step(const FeatureBytes& features, uint32_t frame_idx, double t_ms);

    const BaselineSenderState& sender() const { return sender_; }
    const BaselineReceiverState& receiver() const { return receiver_; }
    Channel& channel() { return channel_; }

private:
    DeltaCodecConfig cfg_;
    Channel channel_;
    BaselineSenderState sender_;
    BaselineReceiverState receiver_;
    double frame_period_ms_;
    double playout_delay_ms_;
    double ack_delay_ms_ = 50.0;
    double ack_timeout_ms_;
    double ack_loss_prob_;
    Prng ack_rng_;
    std::deque<std::pair<double, int64_t>> acks_in_flight_;  // (arrival, frame)
};

}  // namespace tokcast
