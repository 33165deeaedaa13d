#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tokcast/baseline.hpp"
#include "tokcast/bitrate.hpp"
#include "tokcast/channel.hpp"
#include "tokcast/recovery.hpp"
#include "tokcast/synth.hpp"
#include "tokcast/vq_codec.hpp"

namespace tokcast {

// MSE over all samples; identical frames cap at 99 dB.
double psnr(const Frame& a, const Frame& b);

enum class Scheme { Token, Baseline };

struct SourceConfig {
    std::string path;          // Y4M or raw RGB; empty -> synthetic
    SynthConfig synth;         // used when path is empty
    int frame_count = 300;
};

struct RunConfig {
    Scheme scheme = Scheme::Token;
    SourceConfig source;
    std::string codebook_path;         // empty -> fit on the source itself
    std::string model_path;            // required for FillMode-less model recovery
    std::string recovery = "temporal"; // static | temporal | spatial | model
    PacketLayout layout;
    ChannelConfig channel;
    double target_bps = 320000.0;
    double playout_delay_ms = 100.0;
    double non_rendered_threshold_db = 30.0;
    uint64_t seed = 1;

    DeltaCodecConfig baseline;
    double ack_loss_prob = 0.0;

    // In-memory alternatives to the file paths, for tests.
    std::optional<Codebook> codebook;
    std::optional<ContextModel> model;
    std::optional<std::vector<Frame>> frames;
};

struct FrameRecord {
    int64_t frame_index = 0;
    size_t bytes_sent = 0;
    int packets_sent = 0;
    int packets_lost = 0;
    bool rendered = false;
    double psnr_db = 0.0;
    double display_latency_ms = 0.0;
};

struct Summary {
    double median_psnr_db = 0.0;
    double p10_psnr_db = 0.0;
    double worst10_mean_psnr_db = 0.0;
    double non_rendered_pct = 0.0;
    double mean_bitrate_bps = 0.0;
    double latency_mean_ms = 0.0;
    double latency_max_ms = 0.0;
};

struct SessionResult {
    std::vector<FrameRecord> records;
    // receiver-side token grids after recovery, token scheme only
    std::vector<TokenGrid> received_grids;
};

SessionResult run_session(const RunConfig& cfg);

Summary summarize(const std::vector<FrameRecord>& records, double frame_period_ms);

// Per-frame CSV plus a JSON summary; byte-stable across reruns.
void emit_report(const std::vector<FrameRecord>& records, const Summary& summary,
                 const std::string& csv_path, const std::string& json_path);

// Nearest-rank percentile of a sorted copy of `values`.
double percentile_nearest_rank(std::vector<double> values, double pct);

}  // namespace tokcast
