#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mgtc/errors.hpp"
#include "mgtc/mask.hpp"
#include "mgtc/mgtc.hpp"
#include "mgtc/rng.hpp"
#include "mgtc/tokenizer.hpp"

namespace mgtc {

// Uniform random cube subset of exactly round(ratio * L), Fisher-Yates over
// flattened indices seeded with splitmix64. No key frame.
inline TokenMask random_mask(const CubeGrid& grid, double ratio, uint64_t seed) {
    if (ratio < 0.0 || ratio >= 1.0)
        throw ConfigError("mask ratio must be in [0, 1), got " + std::to_string(ratio));
    long L = grid.total_cubes();
    long k = masked_count_for_ratio(ratio, L);

    SplitMix64 rng(seed);
    auto masked = sample_without_replacement(L, k, rng);

    TokenMask mask;
    mask.t_blocks = grid.t_blocks();
    mask.s_blocks = grid.s_blocks();
    mask.keep.assign(L, true);
    for (long idx : masked) mask.keep[idx] = false;
    mask.ratio_requested = ratio;
    mask.strategy = MaskStrategy::random;
    mask.seed = seed;
    return mask;
}

// Tube mask: round(ratio * s_blocks) spatial positions masked at every
// temporal index, so keep(i, j) is independent of i.
inline TokenMask tube_mask(const CubeGrid& grid, double ratio, uint64_t seed) {
    if (ratio < 0.0 || ratio >= 1.0)
        throw ConfigError("mask ratio must be in [0, 1), got " + std::to_string(ratio));
    int s = grid.s_blocks();
    long k = masked_count_for_ratio(ratio, s);

    SplitMix64 rng(seed);
    auto masked_cols = sample_without_replacement(s, k, rng);
    std::vector<bool> col_masked(s, false);
    for (long j : masked_cols) col_masked[j] = true;

    TokenMask mask;
    mask.t_blocks = grid.t_blocks();
    mask.s_blocks = s;
    mask.keep.resize(grid.total_cubes());
    for (int i = 0; i < mask.t_blocks; ++i)
        for (int j = 0; j < s; ++j)
            mask.keep[static_cast<std::size_t>(i) * s + j] = !col_masked[j];
    mask.ratio_requested = ratio;
    mask.strategy = MaskStrategy::tube;
    mask.seed = seed;
    return mask;
}

inline double tube_realized_ratio(const CubeGrid& grid, double ratio) {
    return static_cast<double>(masked_count_for_ratio(ratio, grid.s_blocks())) /
           static_cast<double>(grid.s_blocks());
}

namespace detail {

// Cell positions in clockwise running order within each 2x2 spatial cell.
inline constexpr std::array<std::pair<int, int>, 4> kCellOrder{
    {{0, 0}, {0, 1}, {1, 1}, {1, 0}}};

}  // namespace detail

// Deterministic cell-running mask: within each 2x2 spatial cell, m = 4*ratio
// consecutive positions (cyclic, starting at offset t mod 4) are masked, so
// the pattern runs through the cell and every position is periodically kept.
inline TokenMask cell_running_mask(const CubeGrid& grid, double ratio) {
    int m;
    if (std::abs(ratio - 0.25) < 1e-12) m = 1;
    else if (std::abs(ratio - 0.5) < 1e-12) m = 2;
    else if (std::abs(ratio - 0.75) < 1e-12) m = 3;
    else
        throw ConfigError("cell_running supports ratios {0.25, 0.5, 0.75}, got " +
                          std::to_string(ratio));
    if (grid.spatial_rows() % 2 != 0 || grid.spatial_cols() % 2 != 0)
        throw ConfigError("cell_running requires even spatial lattice dimensions, got " +
                          std::to_string(grid.spatial_rows()) + "x" +
                          std::to_string(grid.spatial_cols()));

    TokenMask mask;
    mask.t_blocks = grid.t_blocks();
    mask.s_blocks = grid.s_blocks();
    mask.keep.assign(grid.total_cubes(), true);

    int cols = grid.spatial_cols();
    for (int i = 0; i < mask.t_blocks; ++i) {
        for (int cr = 0; cr < grid.spatial_rows() / 2; ++cr) {
            for (int cc = 0; cc < cols / 2; ++cc) {
                for (int off = 0; off < m; ++off) {
                    auto [dr, dc] = detail::kCellOrder[(i + off) % 4];
                    int j = (2 * cr + dr) * cols + (2 * cc + dc);
                    mask.keep[static_cast<std::size_t>(i) * mask.s_blocks + j] = false;
                }
            }
        }
    }
    mask.ratio_requested = ratio;
    mask.strategy = MaskStrategy::cell_running;
    return mask;
}

}  // namespace mgtc
