#include "tokcast/channel.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace tokcast {

bool ge_transmit(GEState& state, const GEParams& params) {
    const double loss_p = state.bad ? params.loss_bad : params.loss_good;
    const bool dropped = state.prng.next_unit() < loss_p;
    const double trans_p = state.bad ? params.p_bad_to_good : params.p_good_to_bad;
    if (state.prng.next_unit() < trans_p) state.bad = !state.bad;
    return dropped;
}

double queue_capacity_for_rate(double rate_bps) { return 0.15 * rate_bps / 8.0; }

std::optional<double> link_transmit(FifoLink& link, size_t size_bytes, double t_send_ms) {
    if (t_send_ms < link.last_event_ms)
        throw std::invalid_argument("link_transmit: send times must be non-decreasing");

    const double drained = (t_send_ms - link.last_event_ms) * link.rate_bps / 8000.0;
    link.backlog_bytes = std::max(0.0, link.backlog_bytes - drained);
    link.last_event_ms = t_send_ms;

    if (static_cast<double>(size_bytes) + link.backlog_bytes > link.capacity_bytes)
        return std::nullopt;  // tail drop

    link.backlog_bytes += static_cast<double>(size_bytes);
    const double serialize_ms = static_cast<double>(size_bytes) * 8000.0 / link.rate_bps;
    const double start = std::max(t_send_ms, link.busy_until_ms);
    link.busy_until_ms = start + serialize_ms;
    return link.busy_until_ms + link.propagation_ms;
}

Channel::Channel(const ChannelConfig& cfg) : cfg_(cfg), ge_state_(cfg.ge.seed) {}

std::optional<double> Channel::transmit(size_t size_bytes, double t_send_ms, uint32_t frame_idx) {
    std::optional<double> deliver;
    if (cfg_.scripted_drop_frames.count(frame_idx)) {
        deliver = std::nullopt;
        // GE state still advances so both schemes see the same random trace
        if (cfg_.mode == ChannelMode::GE) ge_transmit(ge_state_, cfg_.ge);
    } else if (cfg_.mode == ChannelMode::GE) {
        deliver = ge_transmit(ge_state_, cfg_.ge) ? std::nullopt
                                                  : std::optional<double>(t_send_ms + cfg_.ge_delay_ms);
    } else {
        deliver = link_transmit(cfg_.fifo, size_bytes, t_send_ms);
    }
    trace_.push_back({next_seq_++, t_send_ms, !deliver.has_value(), deliver.value_or(0.0)});
    return deliver;
}

void Channel::write_trace_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_trace_csv: cannot create " + path);
    out << "packet_seq,t_send_ms,verdict,deliver_ms\n";
    for (const auto& row : trace_) {
        out << row.packet_seq << "," << row.t_send_ms << ","
            << (row.dropped ? "dropped" : "delivered") << ",";
        if (row.dropped)
            out << "\n";
        else
            out << row.deliver_ms << "\n";
    }
}

}  // namespace tokcast
