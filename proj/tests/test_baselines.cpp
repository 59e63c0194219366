#include <doctest.h>

#include <fstream>
#include <set>

#include <json.hpp>

#include "mgtc/baselines.hpp"
#include "mgtc/synthetic.hpp"
#include "mgtc/tokenizer.hpp"

using namespace mgtc;

namespace {

TokenMask load_golden(const std::string& name) {
    std::ifstream in(std::string(GOLDEN_DIR) + "/" + name);
    REQUIRE(in.good());
    nlohmann::json j;
    in >> j;
    return mask_from_json(j);
}

}  // namespace

TEST_CASE("random_mask: exact count, determinism, ratio 0") {
    VideoClip clip = static_clip(8, 16, 16);
    CubeGrid grid = tokenize(clip, {2, 4, 4});  // L = 64

    CHECK(random_mask(grid, 0.0, 1).masked_count() == 0);

    TokenMask a = random_mask(grid, 0.4, 99);
    TokenMask b = random_mask(grid, 0.4, 99);
    CHECK(a.keep == b.keep);
    CHECK(a.masked_count() == masked_count_for_ratio(0.4, 64));

    TokenMask c = random_mask(grid, 0.4, 100);
    CHECK(a.keep != c.keep);  // different seed, different subset (w.h.p.)
}

TEST_CASE("random_mask: L=8 ratio 0.5 seed 42 matches the golden mask") {
    VideoClip clip = static_clip(4, 8, 8);
    CubeGrid grid = tokenize(clip, {2, 4, 4});  // t_blocks 2, s_blocks 4
    REQUIRE(grid.total_cubes() == 8);
    TokenMask mask = random_mask(grid, 0.5, 42);
    TokenMask golden = load_golden("random_L8_r50_seed42.json");
    CHECK(mask.keep == golden.keep);
    CHECK(mask.masked_count() == 4);
}

TEST_CASE("tube_mask: column structure and golden mask") {
    VideoClip clip = static_clip(8, 8, 8);
    CubeGrid grid = tokenize(clip, {2, 4, 4});  // t_blocks 4, s_blocks 4

    TokenMask mask = tube_mask(grid, 0.5, 7);
    for (int j = 0; j < grid.s_blocks(); ++j)
        for (int i = 1; i < grid.t_blocks(); ++i)
            CHECK(mask.kept(i, j) == mask.kept(0, j));
    CHECK(mask.masked_count() == 2 * grid.t_blocks());
    CHECK(tube_realized_ratio(grid, 0.5) == doctest::Approx(0.5));

    TokenMask golden = load_golden("tube_s4_r50_seed7.json");
    CHECK(mask.keep == golden.keep);

    CHECK(tube_mask(grid, 0.0, 7).masked_count() == 0);
}

TEST_CASE("cell_running: ratio 1/2 rotation table") {
    VideoClip clip = static_clip(8, 8, 8);
    CubeGrid grid = tokenize(clip, {2, 4, 4});  // 4 temporal, 2x2 spatial = one cell
    TokenMask mask = cell_running_mask(grid, 0.5);

    // cell order a=(0,0) b=(0,1) c=(1,1) d=(1,0); masks {a,b},{b,c},{c,d},{d,a}
    int a = 0, b = 1, c = 3, d = 2;
    auto masked_at = [&](int i) {
        std::set<int> s;
        for (int j = 0; j < 4; ++j)
            if (!mask.kept(i, j)) s.insert(j);
        return s;
    };
    CHECK(masked_at(0) == std::set<int>{a, b});
    CHECK(masked_at(1) == std::set<int>{b, c});
    CHECK(masked_at(2) == std::set<int>{c, d});
    CHECK(masked_at(3) == std::set<int>{d, a});
}

TEST_CASE("cell_running: ratio 1/4 masks one position per cell per index") {
    VideoClip clip = static_clip(8, 16, 16);
    CubeGrid grid = tokenize(clip, {2, 4, 4});  // 4x4 spatial = 4 cells
    TokenMask mask = cell_running_mask(grid, 0.25);
    for (int i = 0; i < grid.t_blocks(); ++i) {
        long masked = 0;
        for (int j = 0; j < grid.s_blocks(); ++j)
            if (!mask.kept(i, j)) ++masked;
        CHECK(masked == 4);  // one per 2x2 cell
    }
    CHECK(mask.masked_count() == masked_count_for_ratio(0.25, grid.total_cubes()));
}

TEST_CASE("cell_running: every position masked a rho fraction of the period") {
    VideoClip clip = static_clip(16, 8, 8);  // 8 temporal indices = two full periods
    CubeGrid grid = tokenize(clip, {2, 4, 4});
    for (double ratio : {0.25, 0.5, 0.75}) {
        TokenMask mask = cell_running_mask(grid, ratio);
        for (int j = 0; j < grid.s_blocks(); ++j) {
            long masked = 0;
            for (int i = 0; i < grid.t_blocks(); ++i)
                if (!mask.kept(i, j)) ++masked;
            CHECK(static_cast<double>(masked) / grid.t_blocks() == doctest::Approx(ratio));
        }
    }
}

TEST_CASE("cell_running: union over one period covers the whole cell") {
    VideoClip clip = static_clip(8, 8, 8);
    CubeGrid grid = tokenize(clip, {2, 4, 4});
    TokenMask mask = cell_running_mask(grid, 0.25);
    for (int j = 0; j < grid.s_blocks(); ++j) {
        bool masked_somewhere = false, kept_somewhere = false;
        for (int i = 0; i < 4; ++i) {
            if (mask.kept(i, j)) kept_somewhere = true;
            else masked_somewhere = true;
        }
        CHECK(masked_somewhere);
        CHECK(kept_somewhere);
    }
}

TEST_CASE("cell_running: configuration errors") {
    VideoClip clip = static_clip(8, 8, 8);
    CubeGrid grid = tokenize(clip, {2, 4, 4});
    CHECK_THROWS_AS(cell_running_mask(grid, 0.3), ConfigError);

    VideoClip odd = static_clip(8, 12, 8);
    CubeGrid odd_grid = tokenize(odd, {2, 4, 4});  // 3x2 spatial lattice
    CHECK_THROWS_AS(cell_running_mask(odd_grid, 0.5), ConfigError);
}

TEST_CASE("all strategies serialize and round-trip") {
    VideoClip clip = noise_clip(8, 8, 8, 11);
    CubeGrid grid = tokenize(clip, {2, 4, 4});
    for (const TokenMask& mask :
         {random_mask(grid, 0.5, 3), tube_mask(grid, 0.5, 3), cell_running_mask(grid, 0.5)}) {
        TokenMask back = mask_from_json(mask_to_json(mask));
        CHECK(back.keep == mask.keep);
        CHECK(back.strategy == mask.strategy);
        CHECK(back.seed == mask.seed);
    }
}
