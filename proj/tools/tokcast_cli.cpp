#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "tokcast/session.hpp"
#include "tokcast/y4m.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tokcast;

namespace {

PatchGeometry parse_geometry(const json& j, PatchGeometry def = {}) {
    PatchGeometry g = def;
    if (j.contains("h")) g.h = j["h"].get<int>();
    if (j.contains("w")) g.w = j["w"].get<int>();
    if (j.contains("p")) g.p = j["p"].get<int>();
    if (j.contains("d")) g.d = j["d"].get<int>();
    g.validate();
    return g;
}

SourceConfig parse_source(const json& j) {
    SourceConfig src;
    if (j.contains("path")) src.path = j["path"].get<std::string>();
    if (j.contains("frames")) src.frame_count = j["frames"].get<int>();
    if (j.contains("synth")) {
        const json& s = j["synth"];
        int width = s.value("width", 256);
        int height = s.value("height", 256);
        int objects = s.value("objects", 4);
        uint64_t seed = s.value("seed", 7ull);
        src.synth = SynthConfig::random_scene(width, height, objects, seed);
    }
    return src;
}

RunConfig parse_run_config(const json& j) {
    RunConfig cfg;
    if (j.value("scheme", "token") == std::string("baseline")) cfg.scheme = Scheme::Baseline;
    if (j.contains("source")) cfg.source = parse_source(j["source"]);
    cfg.codebook_path = j.value("codebook", "");
    cfg.model_path = j.value("model", "");
    cfg.recovery = j.value("recovery", "temporal");
    if (j.contains("layout")) {
        cfg.layout.pr = j["layout"].value("pr", 2);
        cfg.layout.pc = j["layout"].value("pc", 2);
    }
    if (j.contains("channel")) {
        const json& c = j["channel"];
        cfg.channel.mode = c.value("mode", "ge") == std::string("fifo") ? ChannelMode::Fifo
                                                                        : ChannelMode::GE;
        cfg.channel.ge.loss_bad = c.value("loss_bad", 0.5);
        cfg.channel.ge.loss_good = c.value("loss_good", 0.04);
        cfg.channel.ge.seed = c.value("seed", 0ull);
        cfg.channel.fifo.rate_bps = c.value("rate_bps", 320000.0);
        cfg.channel.fifo.capacity_bytes = c.value("capacity_bytes", 6144.0);
    }
    cfg.target_bps = j.value("target_kbps", 320.0) * 1000.0;
    cfg.playout_delay_ms = j.value("playout_delay_ms", 100.0);
    cfg.non_rendered_threshold_db = j.value("non_rendered_threshold_db", 30.0);
    cfg.seed = j.value("seed", 1ull);
    if (j.contains("baseline")) {
        const json& b = j["baseline"];
        cfg.baseline.keyframe_interval = b.value("keyframe_interval", 30);
        cfg.baseline.change_threshold = b.value("tau", 8.0);
        cfg.baseline.mtu_bytes = b.value("mtu", 324);
        cfg.baseline.parity_overhead = b.value("rho", 0.5);
        cfg.ack_loss_prob = b.value("ack_loss_prob", 0.0);
        if (b.contains("geometry"))
            cfg.baseline.geometry = parse_geometry(b["geometry"], PatchGeometry{16, 16, 16, 4});
    }
    return cfg;
}

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    json j;
    in >> j;
    return j;
}

std::vector<Frame> load_source_frames(const SourceConfig& src) {
    if (src.path.empty()) return synth_sequence(src.synth, src.frame_count);
    FrameSource fs(src.path);
    std::vector<Frame> out;
    while (static_cast<int>(out.size()) < src.frame_count) {
        auto f = fs.read_frame();
        if (!f) break;
        out.push_back(std::move(*f));
    }
    return out;
}

struct CommonOpts {
    std::string config_path;
    std::string out_dir = "out";
    std::optional<uint64_t> seed;
    std::optional<std::string> scheme;
    std::optional<std::string> loss_level;
    std::optional<double> target_kbps;
};

void apply_overrides(RunConfig& cfg, const CommonOpts& opts) {
    if (opts.seed) {
        cfg.seed = *opts.seed;
        cfg.channel.ge.seed = *opts.seed;
    }
    if (opts.scheme) cfg.scheme = *opts.scheme == "baseline" ? Scheme::Baseline : Scheme::Token;
    if (opts.loss_level) {
        if (*opts.loss_level == "low") cfg.channel.ge.loss_bad = 0.25;
        else if (*opts.loss_level == "med") cfg.channel.ge.loss_bad = 0.5;
        else if (*opts.loss_level == "high") cfg.channel.ge.loss_bad = 0.75;
        else throw std::runtime_error("loss level must be low|med|high");
    }
    if (opts.target_kbps) cfg.target_bps = *opts.target_kbps * 1000.0;
}

int cmd_fit_codebook(const CommonOpts& opts) {
    json j = load_config(opts.config_path);
    SourceConfig src = parse_source(j.at("source"));
    const json& codec = j.at("codec");
    PatchGeometry g = parse_geometry(codec.value("geometry", json::object()));
    int n = codec.value("n", 64);
    int max_iters = codec.value("max_iters", 25);
    uint64_t seed = opts.seed.value_or(j.value("seed", 1ull));

    std::vector<Frame> frames = load_source_frames(src);
    Codebook cb = fit_codebook(frames, n, g, max_iters, seed);

    fs::create_directories(opts.out_dir);
    std::string path = opts.out_dir + "/codebook.tcbk";
    save_codebook(cb, path);
    std::cout << "codebook: N=" << cb.entry_count << " bits=" << cb.bits_per_index()
              << " grid=" << g.h << "x" << g.w << " -> " << path << "\n";
    return 0;
}

int cmd_train_recovery(const CommonOpts& opts) {
    json j = load_config(opts.config_path);
    SourceConfig src = parse_source(j.at("source"));
    Codebook cb = load_codebook(j.at("codebook").get<std::string>());

    TrainConfig tc;
    if (j.contains("train")) {
        const json& t = j["train"];
        tc.learning_rate = t.value("learning_rate", tc.learning_rate);
        tc.batch_size = t.value("batch_size", tc.batch_size);
        tc.epochs = t.value("epochs", tc.epochs);
        tc.label_smoothing = t.value("label_smoothing", tc.label_smoothing);
    }
    PacketLayout layout;
    if (j.contains("layout")) {
        layout.pr = j["layout"].value("pr", 2);
        layout.pc = j["layout"].value("pc", 2);
    }
    uint64_t seed = opts.seed.value_or(j.value("seed", 1ull));

    std::vector<Frame> frames = load_source_frames(src);
    std::vector<TokenGrid> corpus;
    corpus.reserve(frames.size());
    for (const auto& f : frames) corpus.push_back(encode(f, cb));

    TrainReport report;
    ContextModel model = train_model(corpus, cb.entry_count, layout, tc, seed, &report);

    fs::create_directories(opts.out_dir);
    std::string path = opts.out_dir + "/model.tcrm";
    save_model(model, path);
    std::cout << "trained " << tc.epochs << " epochs, loss " << report.epoch_mean_loss.front()
              << " -> " << report.epoch_mean_loss.back() << ", model -> " << path << "\n";
    return 0;
}

int run_one(RunConfig cfg, const std::string& out_dir) {
    SessionResult res = run_session(cfg);
    double fps = 30.0;
    if (cfg.frames && !cfg.frames->empty())
        fps = static_cast<double>((*cfg.frames)[0].meta.fps_num) / (*cfg.frames)[0].meta.fps_den;
    else if (cfg.source.path.empty())
        fps = static_cast<double>(cfg.source.synth.fps_num) / cfg.source.synth.fps_den;
    Summary s = summarize(res.records, 1000.0 / fps);

    fs::create_directories(out_dir);
    emit_report(res.records, s, out_dir + "/frames.csv", out_dir + "/summary.json");
    std::cout << out_dir << ": median " << s.median_psnr_db << " dB, p10 " << s.p10_psnr_db
              << " dB, non-rendered " << s.non_rendered_pct << "%, bitrate "
              << s.mean_bitrate_bps / 1000.0 << " Kbps\n";
    return 0;
}

int cmd_run(const CommonOpts& opts) {
    RunConfig cfg = parse_run_config(load_config(opts.config_path));
    apply_overrides(cfg, opts);
    return run_one(cfg, opts.out_dir);
}

int cmd_sweep(const CommonOpts& opts) {
    for (const char* level : {"low", "med", "high"}) {
        CommonOpts o = opts;
        o.loss_level = level;
        RunConfig cfg = parse_run_config(load_config(opts.config_path));
        apply_overrides(cfg, o);
        run_one(cfg, opts.out_dir + "/" + level);
    }
    return 0;
}

int cmd_report(const std::string& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw std::runtime_error("cannot open " + csv_path);
    std::string line;
    std::getline(in, line);  // header
    std::vector<FrameRecord> records;
    while (std::getline(in, line)) {
        FrameRecord r;
        int rendered = 0;
        if (std::sscanf(line.c_str(), "%ld,%zu,%d,%d,%lf,%lf", &r.frame_index, &r.bytes_sent,
                        &r.packets_lost, &rendered, &r.psnr_db, &r.display_latency_ms) != 6)
            throw std::runtime_error("malformed CSV row: " + line);
        r.rendered = rendered != 0;
        records.push_back(r);
    }
    Summary s = summarize(records, 1000.0 / 30.0);
    std::cout << "frames: " << records.size() << "\n"
              << "median PSNR: " << s.median_psnr_db << " dB\n"
              << "p10 PSNR: " << s.p10_psnr_db << " dB\n"
              << "worst-10% mean PSNR: " << s.worst10_mean_psnr_db << " dB\n"
              << "non-rendered: " << s.non_rendered_pct << "%\n"
              << "mean bitrate: " << s.mean_bitrate_bps / 1000.0 << " Kbps\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"token-based loss-resilient video transport simulator"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string report_csv;

    auto add_common = [&](CLI::App* cmd, bool needs_config = true) {
        auto* c = cmd->add_option("--config", opts.config_path, "JSON config file");
        if (needs_config) c->required();
        cmd->add_option("--out-dir", opts.out_dir, "output directory");
        cmd->add_option("--seed", [&](const CLI::results_t& v) {
            opts.seed = std::stoull(v[0]);
            return true;
        }, "override the config seed");
    };

    auto* fitc = app.add_subcommand("fit-codebook", "fit a k-means codebook on a source");
    add_common(fitc);

    auto* train = app.add_subcommand("train-recovery", "train the contextual recovery model");
    add_common(train);

    auto* run = app.add_subcommand("run", "run one session and emit reports");
    add_common(run);
    run->add_option("--scheme", [&](const CLI::results_t& v) { opts.scheme = v[0]; return true; },
                    "token | baseline");
    run->add_option("--loss-level",
                    [&](const CLI::results_t& v) { opts.loss_level = v[0]; return true; },
                    "low | med | high (GE bad-state loss 0.25 / 0.5 / 0.75)");
    run->add_option("--target-kbps",
                    [&](const CLI::results_t& v) { opts.target_kbps = std::stod(v[0]); return true; },
                    "target bitrate in Kbps");

    auto* sweep = app.add_subcommand("sweep", "run all three loss levels");
    add_common(sweep);
    sweep->add_option("--scheme", [&](const CLI::results_t& v) { opts.scheme = v[0]; return true; },
                      "token | baseline");
    sweep->add_option("--target-kbps",
                      [&](const CLI::results_t& v) { opts.target_kbps = std::stod(v[0]); return true; },
                      "target bitrate in Kbps");

    auto* report = app.add_subcommand("report", "summarize a per-frame CSV");
    report->add_option("csv", report_csv, "frames.csv from a previous run")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (fitc->parsed()) return cmd_fit_codebook(opts);
        if (train->parsed()) return cmd_train_recovery(opts);
        if (run->parsed()) return cmd_run(opts);
        if (sweep->parsed()) return cmd_sweep(opts);
        if (report->parsed()) return cmd_report(report_csv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
