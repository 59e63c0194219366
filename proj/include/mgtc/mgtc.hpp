#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "mgtc/errors.hpp"
#include "mgtc/mask.hpp"
#include "mgtc/rng.hpp"
#include "mgtc/tokenizer.hpp"

namespace mgtc {

// Per-cube temporal MSE against the next temporal neighbor. The final
// temporal index copies the previous row forward; a single-temporal-block
// lattice gets the max finite double so residual rank never prefers it.
struct ResidualField {
    std::vector<double> values;  // t_blocks x s_blocks, row-major
    int t_blocks = 0;
    int s_blocks = 0;

    double at(int i, int j) const {
        return values[static_cast<std::size_t>(i) * s_blocks + j];
    }
    long total() const { return static_cast<long>(t_blocks) * s_blocks; }
};

inline ResidualField compute_residuals(const CubeGrid& grid) {
    ResidualField field;
    field.t_blocks = grid.t_blocks();
    field.s_blocks = grid.s_blocks();
    field.values.resize(field.total());

    if (field.t_blocks == 1) {
        std::fill(field.values.begin(), field.values.end(),
                  std::numeric_limits<double>::max());
        return field;
    }

    std::size_t n = grid.cube_pixel_count();
    std::vector<uint8_t> cur, nxt;
    for (int j = 0; j < field.s_blocks; ++j) {
        for (int i = 0; i + 1 < field.t_blocks; ++i) {
            cur = grid.cube_pixels(i, j);
            nxt = grid.cube_pixels(i + 1, j);
            // fixed pixel-major summation order in double precision
            double acc = 0.0;
            for (std::size_t p = 0; p < n; ++p) {
                double d = static_cast<double>(cur[p]) - static_cast<double>(nxt[p]);
                acc += d * d;
            }
            field.values[static_cast<std::size_t>(i) * field.s_blocks + j] =
                acc / static_cast<double>(n);
        }
        field.values[static_cast<std::size_t>(field.t_blocks - 1) * field.s_blocks + j] =
            field.values[static_cast<std::size_t>(field.t_blocks - 2) * field.s_blocks + j];
    }
    return field;
}

struct ThresholdSelection {
    double lambda = 0.0;
    std::vector<std::pair<int, int>> masked;  // (i, j), sorted ascending
};

inline long masked_count_for_ratio(double ratio, long total) {
    return static_cast<long>(std::floor(ratio * static_cast<double>(total) + 0.5));
}

// Rank-based realization of the percentile threshold: mask the k cubes with
// smallest residual outside the key frame, ties broken by ascending (i, j).
// Exact masked count by construction; lambda is reported as max residual in
// the masked set.
inline ThresholdSelection select_threshold(const ResidualField& field, double ratio,
                                           std::optional<int> key_frame = std::nullopt) {
    if (ratio < 0.0 || ratio >= 1.0)
        throw ConfigError("mask ratio must be in [0, 1), got " + std::to_string(ratio));
    long L = field.total();
    long k = masked_count_for_ratio(ratio, L);
    long available = key_frame ? L - field.s_blocks : L;
    if (k > available) {
        double max_ratio = static_cast<double>(available) / static_cast<double>(L);
        throw FeasibilityError("ratio " + std::to_string(ratio) +
                                   " infeasible with key frame; maximum achievable ratio is " +
                                   std::to_string(max_ratio),
                               max_ratio);
    }

    struct Entry {
        double d;
        int i, j;
    };
    std::vector<Entry> entries;
    entries.reserve(available);
    for (int i = 0; i < field.t_blocks; ++i) {
        if (key_frame && i == *key_frame) continue;
        for (int j = 0; j < field.s_blocks; ++j) entries.push_back({field.at(i, j), i, j});
    }
    std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        return a.d < b.d;  // stable sort preserves ascending (i, j) among ties
    });

    ThresholdSelection sel;
    for (long n = 0; n < k; ++n) {
        sel.masked.emplace_back(entries[n].i, entries[n].j);
        sel.lambda = std::max(sel.lambda, entries[n].d);
    }
    std::sort(sel.masked.begin(), sel.masked.end());
    return sel;
}

enum class MaskMode { train, eval };

// Motion-guided mask: residual rank selection with one force-kept key frame.
// eval mode pins the key frame to the middle temporal index; train mode draws
// it uniformly from the seed.
inline TokenMask mgtc_mask(const CubeGrid& grid, double ratio, MaskMode mode,
                           std::optional<uint64_t> seed = std::nullopt) {
    ResidualField field = compute_residuals(grid);

    int key_frame;
    if (mode == MaskMode::train) {
        if (!seed) throw ConfigError("train mode requires a seed for key-frame selection");
        SplitMix64 rng(*seed);
        key_frame = static_cast<int>(rng.next_below(static_cast<uint64_t>(field.t_blocks)));
    } else {
        key_frame = field.t_blocks / 2;
    }

    auto sel = select_threshold(field, ratio, key_frame);

    TokenMask mask;
    mask.t_blocks = field.t_blocks;
    mask.s_blocks = field.s_blocks;
    mask.keep.assign(mask.total(), true);
    for (auto [i, j] : sel.masked)
        mask.keep[static_cast<std::size_t>(i) * mask.s_blocks + j] = false;
    mask.ratio_requested = ratio;
    mask.key_frame_index = key_frame;
    mask.strategy = MaskStrategy::mgtc;
    if (mode == MaskMode::train) mask.seed = seed;
    mask.threshold_lambda = sel.lambda;
    return mask;
}

}  // namespace mgtc
