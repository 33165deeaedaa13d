#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "tokcast/bitrate.hpp"
#include "tokcast/packetizer.hpp"
#include "tokcast/prng.hpp"

namespace tokcast {

// Temporal context depth: tokens received in the previous 6 frames are
// available when reconstructing the current one.
inline constexpr int kTemporalContext = 6;

// Context slots for one cell: the 8 spatial neighbors in raster order
// (NW, N, NE, W, E, SW, S, SE), then temporal offsets -1..-T at the same
// position. A slot holds a token index, or N (the mask symbol) when that
// context position was not received.
inline constexpr int kSpatialSlots = 8;
inline constexpr int kContextSlots = kSpatialSlots + kTemporalContext;

// Received grids only; recovered values are never written back into the
// ring, so prediction is order-independent and replayable.
struct RecoveryContext {
    std::deque<MaskedTokenGrid> history;  // front = oldest, back = most recent
    MaskedTokenGrid current;

    void push_history(const MaskedTokenGrid& grid) {
        history.push_back(grid);
        while (history.size() > kTemporalContext) history.pop_front();
    }
};

// Linear-softmax contextual predictor. score(c) = bias[c] +
// sum_s weights[s][symbol_s][c], with context symbol N standing for a
// missing input token.
struct ContextModel {
    int token_count = 0;  // N

    std::vector<double> weights;  // S x (N+1) x N
    std::vector<double> bias;     // N

    explicit ContextModel(int n = 0)
        : token_count(n),
          weights(static_cast<size_t>(kContextSlots) * (n + 1) * n, 0.0),
          bias(static_cast<size_t>(n), 0.0) {}

    double& weight(int slot, int symbol, int cls) {
        return weights[(static_cast<size_t>(slot) * (token_count + 1) + symbol) * token_count + cls];
    }
    double weight(int slot, int symbol, int cls) const {
        return weights[(static_cast<size_t>(slot) * (token_count + 1) + symbol) * token_count + cls];
    }
};

struct LossSimConfig {
    double self_drop_min = 0.0;
    double self_drop_max = 0.6;
    double self_drop_mode = 0.3;
    double self_drop_std = 0.3;
    double pkt_loss_min = 0.0;
    double pkt_loss_max = 0.8;
};

// Rejection-sampled truncated Gaussian over [min, max].
double sample_self_drop_ratio(const LossSimConfig& cfg, Prng& prng);

struct SimulatedLosses {
    std::vector<MaskedTokenGrid> masked;   // one per input frame
    std::vector<TokenGrid> ground_truth;
    double self_drop_ratio = 0.0;
    double pkt_loss_ratio = 0.0;
};

// Runs the real packetize/self-drop path on each grid, then drops whole
// packets independently with probability r_p, and depacketizes what is
// left. r_d and r_p are drawn once per call.
SimulatedLosses simulate_losses(const std::vector<TokenGrid>& grids,
                                const std::vector<uint32_t>& frame_indices,
                                const PacketLayout& layout, const LossSimConfig& cfg,
                                Prng& prng);

enum class FillMode { Static, Temporal, Spatial };

// Deterministic baselines. Output never contains MISSING; received tokens
// pass through unchanged.
TokenGrid fill_heuristic(const RecoveryContext& context, FillMode mode,
                         uint16_t static_fill_token);

// Context symbols for cell (i, j); each in [0, N] with N = mask.
std::vector<int> context_symbols(const RecoveryContext& context, int i, int j, int token_count);

std::vector<double> model_scores(const std::vector<int>& symbols, const ContextModel& model);
std::vector<double> softmax(const std::vector<double>& scores);

// Label-smoothed cross-entropy for one cell; target distribution is
// (1-eps) one-hot + eps/N uniform.
double cell_loss(const ContextModel& model, const std::vector<int>& symbols, int target,
                 double label_smoothing);

// Adds this cell's exact gradient into grad_weights/grad_bias (same shapes
// as the model's).
void accumulate_cell_gradient(const ContextModel& model, const std::vector<int>& symbols,
                              int target, double label_smoothing, std::vector<double>& grad_weights,
                              std::vector<double>& grad_bias);

struct TrainConfig {
    double learning_rate = 0.05;
    int batch_size = 32;
    int epochs = 20;
    double label_smoothing = 0.1;
    LossSimConfig loss_sim;
};

struct TrainReport {
    std::vector<double> epoch_mean_loss;
};

// Mini-batch SGD on the missing cells of the last frame of each simulated
// (T+1)-frame window. Deterministic given seed.
ContextModel train_model(const std::vector<TokenGrid>& corpus, int token_count,
                         const PacketLayout& layout, const TrainConfig& cfg, uint64_t seed,
                         TrainReport* report = nullptr);

// Fills every MISSING cell of context.current with the argmax class
// (ties -> lowest index); single pass, predictions never feed other cells.
TokenGrid predict_tokens(const RecoveryContext& context, const ContextModel& model);

void save_model(const ContextModel& model, const std::string& path);
ContextModel load_model(const std::string& path);

}  // namespace tokcast
