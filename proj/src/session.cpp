#include "tokcast/session.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "tokcast/y4m.hpp"

namespace tokcast {

double psnr(const Frame& a, const Frame& b) {
    if (a.meta.width != b.meta.width || a.meta.height != b.meta.height)
        throw std::invalid_argument("psnr: dimension mismatch");
    double se = 0.0;
    for (size_t i = 0; i < a.pixels.size(); ++i) {
        double diff = static_cast<double>(a.pixels[i]) - b.pixels[i];
        se += diff * diff;
    }
    double mse = se / static_cast<double>(a.pixels.size());
    if (mse == 0.0) return 99.0;
    return std::min(99.0, 10.0 * std::log10(255.0 * 255.0 / mse));
}

namespace {

std::vector<Frame> load_frames(const SourceConfig& src) {
    if (src.path.empty()) return synth_sequence(src.synth, src.frame_count);
    FrameSource fs(src.path);
    std::vector<Frame> out;
    while (static_cast<int>(out.size()) < src.frame_count) {
        auto f = fs.read_frame();
        if (!f) break;
        out.push_back(std::move(*f));
    }
    if (out.empty()) throw std::runtime_error("run_session: source yielded no frames");
    return out;
}

FillMode parse_fill_mode(const std::string& name) {
    if (name == "static") return FillMode::Static;
    if (name == "temporal") return FillMode::Temporal;
    if (name == "spatial") return FillMode::Spatial;
    throw std::invalid_argument("unknown recovery mode: " + name);
}

SessionResult run_token_session(const RunConfig& cfg, std::vector<Frame> frames,
                                const Codebook& cb) {
    const PatchGeometry& g = cb.geometry;
    const PacketLayout& layout = cfg.layout;
    if (!layout.divides(g)) throw std::invalid_argument("run_session: layout does not divide grid");
    const int m = layout.tokens_per_packet(g);
    const int bits = cb.bits_per_index();
    const double fps = static_cast<double>(frames[0].meta.fps_num) / frames[0].meta.fps_den;
    const double frame_period = 1000.0 / fps;

    BitrateDecision rate = drop_ratio_for_target(cfg.target_bps, layout, g, bits, fps);

    const bool use_model = cfg.recovery == "model";
    ContextModel model;
    if (use_model) {
        if (cfg.model)
            model = *cfg.model;
        else if (!cfg.model_path.empty())
            model = load_model(cfg.model_path);
        else
            throw std::invalid_argument("run_session: model recovery needs a model");
        if (model.token_count != cb.entry_count)
            throw std::invalid_argument("run_session: model/codebook token count mismatch");
    }
    FillMode fill = use_model ? FillMode::Temporal : parse_fill_mode(cfg.recovery);

    Channel channel(cfg.channel);
    RecoveryContext ctx;
    SessionResult result;

    for (const Frame& original : frames) {
        const uint32_t frame_idx = static_cast<uint32_t>(original.index) % kFrameIndexModulus;
        const double t_capture = original.capture_time_ms;
        const double t_display = t_capture + cfg.playout_delay_ms;

        FrameRecord rec;
        rec.frame_index = original.index;

        TokenGrid tokens = encode(original, cb);
        std::vector<Packet> packets = packetize(tokens, frame_idx, layout);

        std::vector<ReceivedPacket> delivered;
        for (auto& pkt : packets) {
            std::vector<int> drops = select_drops(frame_idx, pkt.pkt_idx, m, rate.per_packet_drop);
            Packet thinned = apply_self_drop(pkt, drops);
            std::vector<uint8_t> wire = serialize_packet(thinned, bits);
            rec.bytes_sent += wire.size();
            ++rec.packets_sent;

            auto deliver = channel.transmit(wire.size(), t_capture, frame_idx);
            if (!deliver || *deliver > t_display) {  // late packets count as lost
                ++rec.packets_lost;
                continue;
            }
            Packet parsed = parse_packet(wire, bits);
            ReceivedPacket rp;
            rp.survivor_positions = recover_survivor_positions(
                parsed.frame_idx, parsed.pkt_idx, m, static_cast<int>(parsed.tokens.size()));
            rp.packet = std::move(parsed);
            delivered.push_back(std::move(rp));
        }

        ctx.current = depacketize(delivered, layout, g);
        TokenGrid recovered = use_model ? predict_tokens(ctx, model)
                                        : fill_heuristic(ctx, fill, cb.static_fill_token);
        ctx.push_history(ctx.current);  // the ring keeps received tokens only

        Frame displayed = decode(recovered, cb);
        rec.psnr_db = psnr(displayed, original);
        rec.rendered = rec.psnr_db >= cfg.non_rendered_threshold_db;
        rec.display_latency_ms = cfg.playout_delay_ms;

        result.received_grids.push_back(std::move(recovered));
        result.records.push_back(rec);
    }
    (void)frame_period;
    return result;
}

SessionResult run_baseline_session(const RunConfig& cfg, std::vector<Frame> frames) {
    const double fps = static_cast<double>(frames[0].meta.fps_num) / frames[0].meta.fps_den;
    const double frame_period = 1000.0 / fps;
    DeltaCodecConfig bcfg = cfg.baseline;
    if (bcfg.geometry.frame_width() != frames[0].meta.width ||
        bcfg.geometry.frame_height() != frames[0].meta.height)
        throw std::invalid_argument("run_session: baseline geometry does not match frames");

    BaselineSession session(bcfg, cfg.channel, frame_period, cfg.playout_delay_ms,
                            cfg.ack_loss_prob, cfg.seed);

    SessionResult result;
    std::optional<Frame> last_displayed;
    for (const Frame& original : frames) {
        FeatureBytes feats = quantize_features(extract_features(original, bcfg.geometry));
        BaselineFrameResult step = session.step(
            feats, static_cast<uint32_t>(original.index), original.capture_time_ms);

        FrameRecord rec;
        rec.frame_index = original.index;
        rec.bytes_sent = step.bytes_sent;
        rec.packets_sent = step.shards_sent;
        rec.packets_lost = step.shards_lost;
        rec.rendered = step.rendered;
        rec.display_latency_ms = cfg.playout_delay_ms;

        if (step.rendered) {
            FeatureGrid fg(step.decoded->begin(), step.decoded->end());
            last_displayed = render_features(fg, bcfg.geometry);
        }
        // during a freeze the display is stuck at the last rendered frame
        if (last_displayed) {
            rec.psnr_db = psnr(*last_displayed, original);
        } else {
            Frame gray(original.meta, original.index);
            std::fill(gray.pixels.begin(), gray.pixels.end(), 128);
            rec.psnr_db = psnr(gray, original);
        }
        result.records.push_back(rec);
    }
    return result;
}

}  // namespace

SessionResult run_session(const RunConfig& cfg) {
    std::vector<Frame> frames = cfg.frames ? *cfg.frames : load_frames(cfg.source);
    if (frames.empty()) throw std::runtime_error("run_session: empty source");

    if (cfg.scheme == Scheme::Baseline) return run_baseline_session(cfg, std::move(frames));

    Codebook cb;
    if (cfg.codebook)
        cb = *cfg.codebook;
    else if (!cfg.codebook_path.empty())
        cb = load_codebook(cfg.codebook_path);
    else
        throw std::invalid_argument("run_session: token scheme needs a codebook");
    return run_token_session(cfg, std::move(frames), cb);
}

double percentile_nearest_rank(std::vector<double> values, double pct) {
    if (values.empty()) throw std::invalid_argument("percentile: empty input");
    std::sort(values.begin(), values.end());
    size_t rank = static_cast<size_t>(
        std::ceil(pct / 100.0 * static_cast<double>(values.size())));
    rank = std::clamp<size_t>(rank, 1, values.size());
    return values[rank - 1];
}

Summary summarize(const std::vector<FrameRecord>& records, double frame_period_ms) {
    if (records.empty()) throw std::invalid_argument("summarize: empty input");

    std::vector<double> psnrs;
    size_t total_bytes = 0;
    size_t non_rendered = 0;
    double lat_sum = 0.0, lat_max = 0.0;
    for (const auto& r : records) {
        psnrs.push_back(r.psnr_db);
        total_bytes += r.bytes_sent;
        if (!r.rendered) ++non_rendered;
        lat_sum += r.display_latency_ms;
        lat_max = std::max(lat_max, r.display_latency_ms);
    }

    Summary s;
    s.median_psnr_db = percentile_nearest_rank(psnrs, 50.0);
    s.p10_psnr_db = percentile_nearest_rank(psnrs, 10.0);

    std::vector<double> sorted(psnrs);
    std::sort(sorted.begin(), sorted.end());
    size_t worst = std::max<size_t>(1, sorted.size() / 10);
    s.worst10_mean_psnr_db =
        std::accumulate(sorted.begin(), sorted.begin() + static_cast<long>(worst), 0.0) /
        static_cast<double>(worst);

    s.non_rendered_pct = 100.0 * static_cast<double>(non_rendered) / static_cast<double>(records.size());
    double duration_s = static_cast<double>(records.size()) * frame_period_ms / 1000.0;
    s.mean_bitrate_bps = static_cast<double>(total_bytes) * 8.0 / duration_s;
    s.latency_mean_ms = lat_sum / static_cast<double>(records.size());
    s.latency_max_ms = lat_max;
    return s;
}

void emit_report(const std::vector<FrameRecord>& records, const Summary& summary,
                 const std::string& csv_path, const std::string& json_path) {
    if (records.empty()) throw std::invalid_argument("emit_report: empty record list");

    std::ofstream csv(csv_path);
    if (!csv) throw std::runtime_error("emit_report: cannot create " + csv_path);
    csv << "frame,bytes,packets_lost,rendered,psnr_db,latency_ms\n";
    char buf[64];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof(buf), "%.4f", r.psnr_db);
        csv << r.frame_index << "," << r.bytes_sent << "," << r.packets_lost << ","
            << (r.rendered ? 1 : 0) << "," << buf << ",";
        std::snprintf(buf, sizeof(buf), "%.3f", r.display_latency_ms);
        csv << buf << "\n";
    }
    if (!csv) throw std::runtime_error("emit_report: CSV write failed");

    std::ofstream js(json_path);
    if (!js) throw std::runtime_error("emit_report: cannot create " + json_path);
    auto field = [&](const char* name, double v, bool last = false) {
        std::snprintf(buf, sizeof(buf), "%.4f", v);
        js << "  \"" << name << "\": " << buf << (last ? "\n" : ",\n");
    };
    js << "{\n";
    field("median_psnr_db", summary.median_psnr_db);
    field("p10_psnr_db", summary.p10_psnr_db);
    field("worst10_mean_psnr_db", summary.worst10_mean_psnr_db);
    field("non_rendered_pct", summary.non_rendered_pct);
    field("mean_bitrate_bps", summary.mean_bitrate_bps);
    field("latency_mean_ms", summary.latency_mean_ms);
    field("latency_max_ms", summary.latency_max_ms, true);
    js << "}\n";
    if (!js) throw std::runtime_error("emit_report: JSON write failed");
}

}  // namespace tokcast
