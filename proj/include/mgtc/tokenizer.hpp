#pragma once

#include <string>
#include <vector>

#include "mgtc/errors.hpp"
#include "mgtc/video.hpp"

namespace mgtc {

struct CubeShape {
    int c = 2;
    int p1 = 16;
    int p2 = 16;
};

// Non-overlapping c x p1 x p2 lattice over a clip. Cube (i, j) covers frames
// [i*c, (i+1)*c) and the row-major spatial patch j. Immutable view over the
// owning clip; the clip must outlive the grid.
class CubeGrid {
public:
    CubeGrid(const VideoClip& clip, CubeShape shape)
        : clip_(&clip), shape_(shape) {
        clip.validate();
        if (shape.c < 1 || shape.p1 < 1 || shape.p2 < 1)
            throw ShapeError("cube dimensions must be positive");
        if (clip.t % shape.c != 0)
            throw ShapeError("temporal extent " + std::to_string(shape.c) +
                             " does not divide T=" + std::to_string(clip.t));
        if (clip.h % shape.p1 != 0)
            throw ShapeError("patch height " + std::to_string(shape.p1) +
                             " does not divide H=" + std::to_string(clip.h));
        if (clip.w % shape.p2 != 0)
            throw ShapeError("patch width " + std::to_string(shape.p2) +
                             " does not divide W=" + std::to_string(clip.w));
        t_blocks_ = clip.t / shape.c;
        rows_ = clip.h / shape.p1;
        cols_ = clip.w / shape.p2;
    }

    const VideoClip& clip() const { return *clip_; }
    CubeShape shape() const { return shape_; }
    int t_blocks() const { return t_blocks_; }
    int s_blocks() const { return rows_ * cols_; }
    int spatial_rows() const { return rows_; }
    int spatial_cols() const { return cols_; }
    long total_cubes() const { return static_cast<long>(t_blocks_) * s_blocks(); }
    std::size_t cube_pixel_count() const {
        return static_cast<std::size_t>(shape_.c) * shape_.p1 * shape_.p2 * clip_->channels();
    }

    // Pixels of cube (i, j) in frame-major, row-major, channel-interleaved order.
    std::vector<uint8_t> cube_pixels(int i, int j) const {
        check_index(i, j);
        std::vector<uint8_t> out;
        out.reserve(cube_pixel_count());
        visit_cube(i, j, [&](uint8_t v) { out.push_back(v); });
        return out;
    }

    // Streams cube pixels in the canonical order without materializing a copy.
    template <typename Fn>
    void visit_cube(int i, int j, Fn&& fn) const {
        check_index(i, j);
        int row0 = (j / cols_) * shape_.p1;
        int col0 = (j % cols_) * shape_.p2;
        int chans = clip_->channels();
        for (int f = i * shape_.c; f < (i + 1) * shape_.c; ++f)
            for (int y = row0; y < row0 + shape_.p1; ++y)
                for (int x = col0; x < col0 + shape_.p2; ++x)
                    for (int ch = 0; ch < chans; ++ch) fn(clip_->at(f, y, x, ch));
    }

private:
    void check_index(int i, int j) const {
        if (i < 0 || i >= t_blocks_ || j < 0 || j >= s_blocks())
            throw BoundsError("cube index (" + std::to_string(i) + ", " + std::to_string(j) +
                              ") outside lattice " + std::to_string(t_blocks_) + "x" +
                              std::to_string(s_blocks()));
    }

    const VideoClip* clip_;
    CubeShape shape_;
    int t_blocks_;
    int rows_;
    int cols_;
};

inline CubeGrid tokenize(const VideoClip& clip, CubeShape shape) { return CubeGrid(clip, shape); }

}  // namespace mgtc
