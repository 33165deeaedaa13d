#include "tokcast/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace tokcast {

double sample_self_drop_ratio(const LossSimConfig& cfg, Prng& prng) {
    for (;;) {
        // Box-Muller
        double u1 = prng.next_unit();
        double u2 = prng.next_unit();
        if (u1 <= 0.0) continue;
        double g = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
        double x = cfg.self_drop_mode + cfg.self_drop_std * g;
        if (x >= cfg.self_drop_min && x <= cfg.self_drop_max) return x;
    }
}

SimulatedLosses simulate_losses(const std::vector<TokenGrid>& grids,
                                const std::vector<uint32_t>& frame_indices,
                                const PacketLayout& layout, const LossSimConfig& cfg,
                                Prng& prng) {
    if (grids.size() != frame_indices.size())
        throw std::invalid_argument("simulate_losses: index list mismatch");

    SimulatedLosses out;
    out.ground_truth = grids;
    out.self_drop_ratio = sample_self_drop_ratio(cfg, prng);
    out.pkt_loss_ratio =
        cfg.pkt_loss_min + (cfg.pkt_loss_max - cfg.pkt_loss_min) * prng.next_unit();

    for (size_t f = 0; f < grids.size(); ++f) {
        const PatchGeometry& g = grids[f].geometry;
        const int m = layout.tokens_per_packet(g);
        const int d = static_cast<int>(std::lround(out.self_drop_ratio * m));
        const uint32_t frame_idx = frame_indices[f] % kFrameIndexModulus;

        std::vector<Packet> packets = packetize(grids[f], frame_idx, layout);
        std::vector<ReceivedPacket> received;
        for (auto& pkt : packets) {
            std::vector<int> drops = select_drops(frame_idx, pkt.pkt_idx, m, d);
            Packet thinned = apply_self_drop(pkt, drops);
            if (prng.next_unit() < out.pkt_loss_ratio) continue;  // whole packet lost
            ReceivedPacket rp;
            rp.survivor_positions =
                recover_survivor_positions(frame_idx, pkt.pkt_idx, m,
                                           static_cast<int>(thinned.tokens.size()));
            rp.packet = std::move(thinned);
            received.push_back(std::move(rp));
        }
        out.masked.push_back(depacketize(received, layout, g));
    }
    return out;
}

namespace {

// Mode of the non-MISSING 8-neighbors; MISSING if none. Ties take the
// lowest token index.
uint16_t neighbor_vote(const MaskedTokenGrid& grid, int i, int j) {
    std::vector<uint16_t> votes;
    for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj) {
            if (di == 0 && dj == 0) continue;
            int ni = i + di, nj = j + dj;
            if (ni < 0 || nj < 0 || ni >= grid.geometry.h || nj >= grid.geometry.w) continue;
            uint16_t v = grid.at(ni, nj);
            if (v != MISSING) votes.push_back(v);
        }
    if (votes.empty()) return MISSING;
    std::sort(votes.begin(), votes.end());
    uint16_t best = votes[0];
    size_t best_count = 0, run = 0;
    for (size_t k = 0; k < votes.size(); ++k) {
        run = (k > 0 && votes[k] == votes[k - 1]) ? run + 1 : 1;
        if (run > best_count) {  // strict: ties keep the lower index seen first
            best_count = run;
            best = votes[k];
        }
    }
    return best;
}

// Majority-vote passes until fixpoint or the pass cap; leftovers to static.
void spatial_fill(MaskedTokenGrid& grid, uint16_t static_fill_token) {
    const int max_passes = 8;
    for (int pass = 0; pass < max_passes; ++pass) {
        MaskedTokenGrid snapshot = grid;
        bool changed = false;
        for (int i = 0; i < grid.geometry.h; ++i)
            for (int j = 0; j < grid.geometry.w; ++j) {
                if (!grid.missing(i, j)) continue;
                uint16_t v = neighbor_vote(snapshot, i, j);
                if (v != MISSING) {
                    grid.at(i, j) = v;
                    changed = true;
                }
            }
        if (!changed) break;
    }
    for (auto& e : grid.entries)
        if (e == MISSING) e = static_fill_token;
}

}  // namespace

TokenGrid fill_heuristic(const RecoveryContext& context, FillMode mode,
                         uint16_t static_fill_token) {
    MaskedTokenGrid work = context.current;

    switch (mode) {
        case FillMode::Static:
            for (auto& e : work.entries)
                if (e == MISSING) e = static_fill_token;
            break;
        case FillMode::Temporal: {
            for (int i = 0; i < work.geometry.h; ++i)
                for (int j = 0; j < work.geometry.w; ++j) {
                    if (!work.missing(i, j)) continue;
                    for (auto it = context.history.rbegin(); it != context.history.rend(); ++it) {
                        if (!it->missing(i, j)) {
                            work.at(i, j) = it->at(i, j);
                            break;
                        }
                    }
                }
            spatial_fill(work, static_fill_token);
            break;
        }
        case FillMode::Spatial:
            spatial_fill(work, static_fill_token);
            break;
    }

    TokenGrid out;
    out.geometry = work.geometry;
    out.entries = std::move(work.entries);
    return out;
}

std::vector<int> context_symbols(const RecoveryContext& context, int i, int j, int token_count) {
    const MaskedTokenGrid& cur = context.current;
    std::vector<int> symbols;
    symbols.reserve(kContextSlots);

    static constexpr int kOffsets[kSpatialSlots][2] = {
        {-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 1}, {1, -1}, {1, 0}, {1, 1}};
    for (const auto& off : kOffsets) {
        int ni = i + off[0], nj = j + off[1];
        if (ni < 0 || nj < 0 || ni >= cur.geometry.h || nj >= cur.geometry.w) {
            symbols.push_back(token_count);
            continue;
        }
        uint16_t v = cur.at(ni, nj);
        symbols.push_back(v == MISSING ? token_count : v);
    }
    // temporal offsets -1 .. -T (back of the ring is the most recent frame)
    for (int back = 1; back <= kTemporalContext; ++back) {
        if (static_cast<size_t>(back) > context.history.size()) {
            symbols.push_back(token_count);
            continue;
        }
        const MaskedTokenGrid& past = context.history[context.history.size() - back];
        uint16_t v = past.at(i, j);
        symbols.push_back(v == MISSING ? token_count : v);
    }
    return symbols;
}

std::vector<double> model_scores(const std::vector<int>& symbols, const ContextModel& model) {
    const int n = model.token_count;
    if (symbols.size() != kContextSlots)
        throw std::invalid_argument("model_scores: wrong slot count");
    std::vector<double> scores(model.bias);
    for (int s = 0; s < kContextSlots; ++s) {
        int sym = symbols[static_cast<size_t>(s)];
        if (sym < 0 || sym > n) throw std::out_of_range("model_scores: symbol out of range");
        const double* row =
            model.weights.data() + (static_cast<size_t>(s) * (n + 1) + sym) * n;
        for (int c = 0; c < n; ++c) scores[static_cast<size_t>(c)] += row[c];
    }
    return scores;
}

std::vector<double> softmax(const std::vector<double>& scores) {
    double max = *std::max_element(scores.begin(), scores.end());
    std::vector<double> out(scores.size());
    double sum = 0.0;
    for (size_t i = 0; i < scores.size(); ++i) {
        out[i] = std::exp(scores[i] - max);
        sum += out[i];
    }
    for (auto& v : out) v /= sum;
    return out;
}

double cell_loss(const ContextModel& model, const std::vector<int>& symbols, int target,
                 double label_smoothing) {
    const int n = model.token_count;
    std::vector<double> p = softmax(model_scores(symbols, model));
    double loss = 0.0;
    for (int c = 0; c < n; ++c) {
        double q = label_smoothing / n + (c == target ? 1.0 - label_smoothing : 0.0);
        if (q > 0.0) loss -= q * std::log(std::max(p[static_cast<size_t>(c)], 1e-300));
    }
    return loss;
}

void accumulate_cell_gradient(const ContextModel& model, const std::vector<int>& symbols,
                              int target, double label_smoothing, std::vector<double>& grad_weights,
                              std::vector<double>& grad_bias) {
    const int n = model.token_count;
    std::vector<double> p = softmax(model_scores(symbols, model));
    // dL/dscore_c = p_c - q_c for softmax + smoothed cross-entropy
    std::vector<double> g(static_cast<size_t>(n));
    for (int c = 0; c < n; ++c)
        g[static_cast<size_t>(c)] = p[static_cast<size_t>(c)] - label_smoothing / n -
                                    (c == target ? 1.0 - label_smoothing : 0.0);
    for (int c = 0; c < n; ++c) grad_bias[static_cast<size_t>(c)] += g[static_cast<size_t>(c)];
    for (int s = 0; s < kContextSlots; ++s) {
        double* row = grad_weights.data() +
                      (static_cast<size_t>(s) * (n + 1) + symbols[static_cast<size_t>(s)]) * n;
        for (int c = 0; c < n; ++c) row[c] += g[static_cast<size_t>(c)];
    }
}

ContextModel train_model(const std::vector<TokenGrid>& corpus, int token_count,
                         const PacketLayout& layout, const TrainConfig& cfg, uint64_t seed,
                         TrainReport* report) {
    const size_t window = kTemporalContext + 1;
    if (corpus.size() < window)
        throw std::invalid_argument("train_model: corpus shorter than temporal window");

    ContextModel model(token_count);
    std::vector<double> grad_w(model.weights.size(), 0.0);
    std::vector<double> grad_b(model.bias.size(), 0.0);
    Prng prng(seed);

    const size_t sample_count = corpus.size() - window + 1;
    std::vector<size_t> order(sample_count);
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Fisher-Yates shuffle of the window order
        for (size_t t = 0; t + 1 < order.size(); ++t) {
            size_t j = t + prng.next_below(order.size() - t);
            std::swap(order[t], order[j]);
        }

        double loss_sum = 0.0;
        size_t loss_cells = 0;
        int in_batch = 0;

        auto apply_batch = [&](int count) {
            if (count == 0) return;
            const double step = cfg.learning_rate / count;
            for (size_t i = 0; i < grad_w.size(); ++i) {
                model.weights[i] -= step * grad_w[i];
                grad_w[i] = 0.0;
            }
            for (size_t i = 0; i < grad_b.size(); ++i) {
                model.bias[i] -= step * grad_b[i];
                grad_b[i] = 0.0;
            }
        };

        for (size_t s : order) {
            std::vector<TokenGrid> grids(corpus.begin() + static_cast<long>(s),
                                         corpus.begin() + static_cast<long>(s + window));
            std::vector<uint32_t> indices(window);
            std::iota(indices.begin(), indices.end(), static_cast<uint32_t>(s));

            SimulatedLosses sim = simulate_losses(grids, indices, layout, cfg.loss_sim, prng);

            RecoveryContext ctx;
            for (size_t f = 0; f + 1 < window; ++f) ctx.push_history(sim.masked[f]);
            ctx.current = sim.masked.back();
            const TokenGrid& truth = sim.ground_truth.back();

            for (int i = 0; i < truth.geometry.h; ++i) {
                for (int j = 0; j < truth.geometry.w; ++j) {
                    if (!ctx.current.missing(i, j)) continue;  // loss only on missing cells
                    std::vector<int> symbols = context_symbols(ctx, i, j, token_count);
                    int target = truth.at(i, j);
                    loss_sum += cell_loss(model, symbols, target, cfg.label_smoothing);
                    ++loss_cells;
                    accumulate_cell_gradient(model, symbols, target, cfg.label_smoothing, grad_w,
                                             grad_b);
                    if (++in_batch == cfg.batch_size) {
                        apply_batch(in_batch);
                        in_batch = 0;
                    }
                }
            }
        }
        apply_batch(in_batch);
        in_batch = 0;

        double mean = loss_cells ? loss_sum / static_cast<double>(loss_cells) : 0.0;
        if (!std::isfinite(mean))
            throw std::runtime_error("train_model: non-finite loss at epoch " +
                                     std::to_string(epoch));
        if (report) report->epoch_mean_loss.push_back(mean);
    }
    return model;
}

TokenGrid predict_tokens(const RecoveryContext& context, const ContextModel& model) {
    const MaskedTokenGrid& cur = context.current;
    TokenGrid out;
    out.geometry = cur.geometry;
    out.entries = cur.entries;

    for (int i = 0; i < cur.geometry.h; ++i)
        for (int j = 0; j < cur.geometry.w; ++j) {
            if (!cur.missing(i, j)) continue;
            std::vector<double> scores =
                model_scores(context_symbols(context, i, j, model.token_count), model);
            int best = 0;
            for (int c = 1; c < model.token_count; ++c)
                if (scores[static_cast<size_t>(c)] > scores[static_cast<size_t>(best)]) best = c;
            out.at(i, j) = static_cast<uint16_t>(best);
        }
    return out;
}

namespace {

template <typename T>
void put(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

}  // namespace

void save_model(const ContextModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_model: cannot create " + path);
    out.write("TCRM", 4);
    put<uint16_t>(out, 1);
    put<uint32_t>(out, static_cast<uint32_t>(model.token_count));
    put<uint32_t>(out, kContextSlots);
    put<uint32_t>(out, kTemporalContext);
    for (double w : model.weights) put<float>(out, static_cast<float>(w));
    for (double b : model.bias) put<float>(out, static_cast<float>(b));
    if (!out) throw std::runtime_error("save_model: write failed");
}

ContextModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_model: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != "TCRM")
        throw std::runtime_error("load_model: bad magic");
    if (get<uint16_t>(in) != 1) throw std::runtime_error("load_model: unsupported version");
    int n = static_cast<int>(get<uint32_t>(in));
    if (get<uint32_t>(in) != kContextSlots || get<uint32_t>(in) != kTemporalContext)
        throw std::runtime_error("load_model: context shape mismatch");
    ContextModel model(n);
    for (auto& w : model.weights) w = get<float>(in);
    for (auto& b : model.bias) b = get<float>(in);
    if (!in) throw std::runtime_error("load_model: truncated weights");
    return model;
}

}  // namespace tokcast
