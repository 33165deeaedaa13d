#include <cmath>

#include "doctest.h"
#include "tokcast/recovery.hpp"

using namespace tokcast;

namespace {

const PatchGeometry kGeom{4, 4, 4, 1};
const PacketLayout kLayout{2, 2};

MaskedTokenGrid grid_of(uint16_t value) {
    MaskedTokenGrid g(kGeom);
    std::fill(g.entries.begin(), g.entries.end(), value);
    return g;
}

LossSimConfig fixed_losses(double r_d, double r_p) {
    LossSimConfig cfg;
    cfg.self_drop_mode = r_d;
    cfg.self_drop_std = 0.0;  // degenerate Gaussian: always exactly r_d
    cfg.self_drop_min = 0.0;
    cfg.self_drop_max = r_d;
    cfg.pkt_loss_min = r_p;
    cfg.pkt_loss_max = r_p;
    return cfg;
}

}  // namespace

TEST_CASE("truncated gaussian sampler") {
    LossSimConfig cfg;
    Prng prng(4);
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        double x = sample_self_drop_ratio(cfg, prng);
        CHECK(x >= 0.0);
        CHECK(x <= 0.6);
        sum += x;
    }
    // truncation interval symmetric about the mode -> mean is the mode
    CHECK(sum / n == doctest::Approx(0.3).epsilon(0.01));
}

TEST_CASE("simulate_losses degenerate rates") {
    std::vector<TokenGrid> grids;
    for (int f = 0; f < 3; ++f) {
        TokenGrid g(kGeom);
        for (size_t i = 0; i < g.entries.size(); ++i) g.entries[i] = static_cast<uint16_t>(i % 4);
        grids.push_back(g);
    }
    std::vector<uint32_t> indices{0, 1, 2};

    SUBCASE("no self-drop, no packet loss -> nothing missing") {
        Prng prng(1);
        auto sim = simulate_losses(grids, indices, kLayout, fixed_losses(0.0, 0.0), prng);
        for (size_t f = 0; f < grids.size(); ++f) {
            CHECK(sim.masked[f].missing_count() == 0);
            CHECK(sim.masked[f].entries == grids[f].entries);
        }
    }
    SUBCASE("certain packet loss -> everything missing") {
        Prng prng(1);
        auto sim = simulate_losses(grids, indices, kLayout, fixed_losses(0.0, 1.0), prng);
        for (const auto& m : sim.masked)
            CHECK(m.missing_count() == static_cast<size_t>(kGeom.cells()));
    }
}

TEST_CASE("simulate_losses missing fraction matches independence arithmetic") {
    // m=4 tokens per packet, r_d=0.25 -> d=1, r_p=0.3:
    // P(missing) = 1 - (1-0.3)(1-0.25) = 0.475
    TokenGrid g(kGeom);
    std::vector<TokenGrid> grids{g};
    Prng prng(8);
    size_t missing = 0, cells = 0;
    for (uint32_t trial = 0; trial < 10000; ++trial) {
        auto sim = simulate_losses(grids, {trial}, kLayout, fixed_losses(0.25, 0.3), prng);
        missing += sim.masked[0].missing_count();
        cells += static_cast<size_t>(kGeom.cells());
    }
    double frac = static_cast<double>(missing) / static_cast<double>(cells);
    CHECK(std::abs(frac - 0.475) < 0.01);
}

TEST_CASE("fill heuristics") {
    SUBCASE("no missing cells -> identity for every mode") {
        RecoveryContext ctx;
        ctx.current = grid_of(3);
        for (FillMode mode : {FillMode::Static, FillMode::Temporal, FillMode::Spatial}) {
            TokenGrid out = fill_heuristic(ctx, mode, 0);
            CHECK(out.entries == ctx.current.entries);
        }
    }
    SUBCASE("static fills with the corpus token") {
        RecoveryContext ctx;
        ctx.current = grid_of(3);
        ctx.current.at(1, 2) = MISSING;
        TokenGrid out = fill_heuristic(ctx, FillMode::Static, 9);
        CHECK(out.at(1, 2) == 9);
        CHECK(out.at(0, 0) == 3);
    }
    SUBCASE("temporal copies the most recent received token") {
        RecoveryContext ctx;
        ctx.push_history(grid_of(5));
        MaskedTokenGrid recent = grid_of(7);
        recent.at(2, 2) = MISSING;  // recent frame also missed this cell
        ctx.push_history(recent);
        ctx.current = grid_of(1);
        ctx.current.at(1, 1) = MISSING;
        ctx.current.at(2, 2) = MISSING;
        TokenGrid out = fill_heuristic(ctx, FillMode::Temporal, 0);
        CHECK(out.at(1, 1) == 7);  // newest history frame wins
        CHECK(out.at(2, 2) == 5);  // falls through to the older frame
    }
    SUBCASE("temporal falls back to spatial then static") {
        RecoveryContext ctx;
        MaskedTokenGrid hist(kGeom);  // all MISSING
        ctx.push_history(hist);
        ctx.current = grid_of(6);
        ctx.current.at(0, 0) = MISSING;
        TokenGrid out = fill_heuristic(ctx, FillMode::Temporal, 2);
        CHECK(out.at(0, 0) == 6);  // neighbors vote

        ctx.current = MaskedTokenGrid(kGeom);  // nothing received at all
        out = fill_heuristic(ctx, FillMode::Temporal, 2);
        for (uint16_t v : out.entries) CHECK(v == 2);  // static fallback
    }
    SUBCASE("spatial majority vote with lowest-index ties") {
        RecoveryContext ctx;
        ctx.current = MaskedTokenGrid(kGeom);
        // cell (1,1) has neighbors {5,5,5,9}
        ctx.current.at(0, 0) = 5;
        ctx.current.at(0, 1) = 5;
        ctx.current.at(0, 2) = 5;
        ctx.current.at(1, 0) = 9;
        TokenGrid out = fill_heuristic(ctx, FillMode::Spatial, 0);
        CHECK(out.at(1, 1) == 5);

        RecoveryContext tie;
        tie.current = MaskedTokenGrid(kGeom);
        tie.current.at(0, 0) = 9;
        tie.current.at(0, 1) = 4;
        TokenGrid tied = fill_heuristic(tie, FillMode::Spatial, 0);
        CHECK(tied.at(1, 1) == 4);  // one vote each -> lowest index
    }
    SUBCASE("output is always total") {
        Prng prng(3);
        for (int trial = 0; trial < 50; ++trial) {
            RecoveryContext ctx;
            ctx.current = MaskedTokenGrid(kGeom);
            for (auto& e : ctx.current.entries)
                if (prng.next_unit() < 0.7) e = static_cast<uint16_t>(prng.next_below(8));
            for (FillMode mode : {FillMode::Static, FillMode::Temporal, FillMode::Spatial}) {
                TokenGrid out = fill_heuristic(ctx, mode, 1);
                for (size_t i = 0; i < out.entries.size(); ++i) {
                    CHECK(out.entries[i] != MISSING);
                    if (ctx.current.entries[i] != MISSING)
                        CHECK(out.entries[i] == ctx.current.entries[i]);  // pass-through
                }
            }
        }
    }
}

TEST_CASE("context symbols") {
    RecoveryContext ctx;
    ctx.current = MaskedTokenGrid(kGeom);
    ctx.current.at(0, 0) = 3;

    // corner cell: out-of-bounds and missing context positions both give the
    // mask symbol N
    auto symbols = context_symbols(ctx, 0, 0, 8);
    REQUIRE(symbols.size() == static_cast<size_t>(kContextSlots));
    for (int sym : symbols) CHECK(sym == 8);

    // cell (1,1): NW neighbor is the received token 3
    symbols = context_symbols(ctx, 1, 1, 8);
    CHECK(symbols[0] == 3);
    for (size_t s = 1; s < symbols.size(); ++s) CHECK(symbols[s] == 8);

    ctx.push_history(grid_of(6));
    symbols = context_symbols(ctx, 1, 1, 8);
    CHECK(symbols[kSpatialSlots] == 6);      // offset -1
    CHECK(symbols[kSpatialSlots + 1] == 8);  // offset -2 has no frame yet
}

TEST_CASE("zero model scores give the uniform distribution") {
    const int n = 64;
    ContextModel model(n);
    std::vector<int> symbols(kContextSlots, n);
    auto probs = softmax(model_scores(symbols, model));
    for (double p : probs) CHECK(p == doctest::Approx(1.0 / n));
    // uniform-model cross-entropy is ln N for any target
    CHECK(cell_loss(model, symbols, 17, 0.1) == doctest::Approx(std::log(64.0)));
    CHECK(std::log(64.0) == doctest::Approx(4.1589).epsilon(1e-4));
}

TEST_CASE("analytic gradient matches central finite differences") {
    const int n = 5;
    ContextModel model(n);
    Prng prng(12);
    for (auto& w : model.weights) w = prng.next_unit() - 0.5;
    for (auto& b : model.bias) b = prng.next_unit() - 0.5;

    std::vector<int> symbols(kContextSlots);
    for (auto& s : symbols) s = static_cast<int>(prng.next_below(n + 1));
    const int target = 3;
    const double eps_smooth = 0.1;

    std::vector<double> gw(model.weights.size(), 0.0), gb(model.bias.size(), 0.0);
    accumulate_cell_gradient(model, symbols, target, eps_smooth, gw, gb);

    const double h = 1e-6;
    auto check_param = [&](double& param, double analytic) {
        double saved = param;
        param = saved + h;
        double up = cell_loss(model, symbols, target, eps_smooth);
        param = saved - h;
        double down = cell_loss(model, symbols, target, eps_smooth);
        param = saved;
        double numeric = (up - down) / (2.0 * h);
        if (std::abs(numeric) > 1e-8)
            CHECK(std::abs(analytic - numeric) / std::abs(numeric) < 1e-5);
        else
            CHECK(std::abs(analytic - numeric) < 1e-8);
    };

    for (int c = 0; c < n; ++c) check_param(model.bias[static_cast<size_t>(c)], gb[static_cast<size_t>(c)]);
    for (int s = 0; s < kContextSlots; ++s)
        for (int c = 0; c < n; ++c) {
            size_t idx = (static_cast<size_t>(s) * (n + 1) + static_cast<size_t>(symbols[static_cast<size_t>(s)])) * n +
                         static_cast<size_t>(c);
            check_param(model.weights[idx], gw[idx]);
        }
}

TEST_CASE("predict_tokens tie-break and pass-through") {
    const int n = 6;
    ContextModel model(n);
    RecoveryContext ctx;
    ctx.current = MaskedTokenGrid(kGeom);

    SUBCASE("all missing, zero model -> lowest index everywhere") {
        TokenGrid out = predict_tokens(ctx, model);
        for (uint16_t v : out.entries) CHECK(v == 0);
    }
    SUBCASE("received cells pass through unchanged") {
        ctx.current.at(2, 3) = 4;
        TokenGrid out = predict_tokens(ctx, model);
        CHECK(out.at(2, 3) == 4);
    }
    SUBCASE("biased model predicts its favorite class") {
        model.bias[5] = 1.0;
        TokenGrid out = predict_tokens(ctx, model);
        for (uint16_t v : out.entries) CHECK(v == 5);
    }
}

TEST_CASE("training on a constant corpus learns the constant") {
    const int n = 4;
    std::vector<TokenGrid> corpus;
    for (int f = 0; f < 10; ++f) {
        TokenGrid g(kGeom);
        std::fill(g.entries.begin(), g.entries.end(), static_cast<uint16_t>(2));
        corpus.push_back(g);
    }
    TrainConfig cfg;
    cfg.epochs = 5;
    TrainReport report;
    ContextModel model = train_model(corpus, n, kLayout, cfg, 1, &report);
    REQUIRE(report.epoch_mean_loss.size() == 5);
    // starts from the uniform model, so the first-epoch mean cannot exceed ln N
    CHECK(report.epoch_mean_loss.front() <= std::log(4.0) + 1e-6);
    CHECK(report.epoch_mean_loss.back() < report.epoch_mean_loss.front());

    // any mask pattern -> argmax 2
    RecoveryContext ctx;
    ctx.current = MaskedTokenGrid(kGeom);
    TokenGrid out = predict_tokens(ctx, model);
    for (uint16_t v : out.entries) CHECK(v == 2);
}

TEST_CASE("training is deterministic and stateless across replays") {
    std::vector<TokenGrid> corpus;
    Prng gen(44);
    for (int f = 0; f < 9; ++f) {
        TokenGrid g(kGeom);
        for (auto& e : g.entries) e = static_cast<uint16_t>(gen.next_below(4));
        corpus.push_back(g);
    }
    TrainConfig cfg;
    cfg.epochs = 3;
    ContextModel a = train_model(corpus, 4, kLayout, cfg, 5, nullptr);
    ContextModel b = train_model(corpus, 4, kLayout, cfg, 5, nullptr);
    CHECK(a.weights == b.weights);
    CHECK(a.bias == b.bias);

    // prediction depends only on the declared context ring
    RecoveryContext ctx;
    for (int f = 0; f < 7; ++f) {
        MaskedTokenGrid m(corpus[static_cast<size_t>(f)]);
        m.at(1, 1) = MISSING;
        if (f < 6)
            ctx.push_history(m);
        else
            ctx.current = m;
    }
    TokenGrid first = predict_tokens(ctx, a);
    RecoveryContext replay;
    for (int f = 0; f < 6; ++f) {
        MaskedTokenGrid m(corpus[static_cast<size_t>(f)]);
        m.at(1, 1) = MISSING;
        replay.push_history(m);
    }
    MaskedTokenGrid cur(corpus[6]);
    cur.at(1, 1) = MISSING;
    replay.current = cur;
    CHECK(predict_tokens(replay, a).entries == first.entries);
}

TEST_CASE("train_model rejects a short corpus") {
    std::vector<TokenGrid> corpus(3, TokenGrid(kGeom));
    TrainConfig cfg;
    CHECK_THROWS(train_model(corpus, 4, kLayout, cfg, 1, nullptr));
}

TEST_CASE("model save load round trip") {
    const int n = 6;
    ContextModel model(n);
    Prng prng(2);
    // multiples of 2^-11 survive the float round trip in the file format exactly
    for (auto& w : model.weights) w = static_cast<double>(prng.next_below(4096)) / 2048.0 - 1.0;
    for (auto& b : model.bias) b = static_cast<double>(prng.next_below(4096)) / 2048.0 - 1.0;

    std::string path = "/tmp/tokcast_test_model.bin";
    save_model(model, path);
    ContextModel back = load_model(path);
    CHECK(back.token_count == n);
    CHECK(back.weights == model.weights);
    CHECK(back.bias == model.bias);
}
