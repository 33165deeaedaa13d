#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tokcast/prng.hpp"

namespace tokcast {

struct GEParams {
    double p_good_to_bad = 0.068;
    double p_bad_to_good = 0.852;
    double loss_good = 0.04;
    double loss_bad = 0.5;
    uint64_t seed = 0;

    double stationary_bad() const { return p_good_to_bad / (p_good_to_bad + p_bad_to_good); }
    double expected_loss() const {
        return (1.0 - stationary_bad()) * loss_good + stationary_bad() * loss_bad;
    }
};

struct GEState {
    bool bad = false;  // starts in Good
    Prng prng;

    explicit GEState(uint64_t seed = 0) : prng(seed) {}
};

// Per-packet: sample loss with the current state's loss probability, then
// sample the state transition. Both draws advance the PRNG exactly once.
bool ge_transmit(GEState& state, const GEParams& params);

struct FifoLink {
    double rate_bps = 320000.0;
    double capacity_bytes = 6144.0;  // 6 KB queue at the default 320 Kbps
    double propagation_ms = 50.0;

    double backlog_bytes = 0.0;
    double busy_until_ms = 0.0;
    double last_event_ms = 0.0;
};

// 0.15*r seconds of buffering, the 150 ms bound at full load.
double queue_capacity_for_rate(double rate_bps);

// Drains the backlog up to t_send, then either tail-drops or returns the
// delivery time (serialization + propagation).
std::optional<double> link_transmit(FifoLink& link, size_t size_bytes, double t_send_ms);

enum class ChannelMode { GE, Fifo };

struct ChannelConfig {
    ChannelMode mode = ChannelMode::GE;
    GEParams ge;
    FifoLink fifo;
    double ge_delay_ms = 50.0;
    // Frames whose packets are all force-dropped; used for scripted traces.
    std::set<uint32_t> scripted_drop_frames;
};

struct TraceRow {
    uint64_t packet_seq;
    double t_send_ms;
    bool dropped;
    double deliver_ms;  // meaningful only when !dropped
};

class Channel {
public:
    explicit Channel(const ChannelConfig& cfg);

    // Returns the delivery time, or nullopt if the packet was dropped.
    std::optional<double> transmit(size_t size_bytes, double t_send_ms, uint32_t frame_idx);

    const std::vector<TraceRow>& trace() const { return trace_; }
    void write_trace_csv(const std::string& path) const;

private:
    ChannelConfig cfg_;
    GEState ge_state_;
    uint64_t next_seq_ = 0;
    std::vector<TraceRow> trace_;
};

}  // namespace tokcast
