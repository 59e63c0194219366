#pragma once

#include <cstdint>
#include <vector>

#include "mgtc/mgtc.hpp"
#include "mgtc/synthetic.hpp"
#include "mgtc/tokenizer.hpp"
#include "mgtc/toy_transformer.hpp"

namespace mgtc {

// Desk-scale 2-class task: does the bright block move left or right?
// Trains a small encoder on MGTC-masked tokens only; the point is that the
// kept tokens carry the motion signal.

struct DemoConfig {
    double mask_ratio = 0.5;
    uint64_t seed = 7;
    int max_steps = 800;  // documented step budget
    double lr = 0.005;
    int depth = 2;
    int width = 16;
};

struct DemoResult {
    std::vector<double> accuracy_per_epoch;  // train accuracy after each epoch
    std::vector<double> mean_loss_per_epoch;
    double final_accuracy = 0.0;
    int steps_used = 0;
};

namespace detail {

struct DemoExample {
    VideoClip clip;
    int label;  // 0 = leftward, 1 = rightward
};

inline std::vector<DemoExample> demo_dataset() {
    std::vector<DemoExample> data;
    for (int dir = 0; dir < 2; ++dir) {
        int dx = dir == 0 ? -4 : 4;
        for (int row0 : {0, 8, 16, 24})
            for (int col0 : {0, 12})
                data.push_back({moving_block_clip(8, 32, 32, 8, row0, col0, dx), dir});
    }
    return data;
}

}  // namespace detail

inline DemoResult run_direction_demo(const DemoConfig& cfg) {
    auto data = detail::demo_dataset();
    CubeShape shape{2, 8, 8};

    // one train-mode mask per clip, seeds derived from the run seed
    std::vector<TokenBatch> batches;
    LatticeDims lattice{};
    int in_dim = 0;
    for (std::size_t n = 0; n < data.size(); ++n) {
        CubeGrid grid = tokenize(data[n].clip, shape);
        TokenMask mask = mgtc_mask(grid, cfg.mask_ratio, MaskMode::train, cfg.seed + n);
        batches.push_back(make_token_batch(grid, mask));
        lattice = {grid.t_blocks(), grid.s_blocks()};
        in_dim = batches.back().in_dim;
    }

    EncoderSpec spec{cfg.depth, cfg.width, 2.0, 2, 1};
    ModelParams params = init_params(spec, lattice, in_dim, cfg.seed);

    DemoResult result;
    int steps = 0;
    while (steps < cfg.max_steps) {
        double loss_sum = 0.0;
        for (std::size_t n = 0; n < data.size() && steps < cfg.max_steps; ++n) {
            loss_sum += train_step(params, batches[n], data[n].label, cfg.lr).loss;
            ++steps;
        }
        long correct = 0;
        for (std::size_t n = 0; n < data.size(); ++n) {
            auto logits = forward(params, batches[n]);
            int pred = logits[1] > logits[0] ? 1 : 0;
            if (pred == data[n].label) ++correct;
        }
        double acc = static_cast<double>(correct) / static_cast<double>(data.size());
        result.accuracy_per_epoch.push_back(acc);
        result.mean_loss_per_epoch.push_back(loss_sum / static_cast<double>(data.size()));
        if (acc == 1.0) break;
    }
    result.final_accuracy = result.accuracy_per_epoch.back();
    result.steps_used = steps;
    return result;
}

}  // namespace mgtc
