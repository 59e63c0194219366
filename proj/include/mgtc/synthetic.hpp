#pragma once

#include <cstdint>
#include <vector>

#include "mgtc/rng.hpp"
#include "mgtc/video.hpp"

namespace mgtc {

// Bundled synthetic clip generators: every acceptance scenario runs offline
// against these instead of real datasets.

inline VideoClip static_clip(int t, int h, int w, uint8_t value = 90, double fps = 30.0) {
    VideoClip clip;
    clip.t = t;
    clip.h = h;
    clip.w = w;
    clip.colorspace = Colorspace::grayscale;
    clip.source_fps = fps;
    clip.frames.assign(clip.pixel_count(), value);
    return clip;
}

inline VideoClip noise_clip(int t, int h, int w, uint64_t seed, double fps = 30.0) {
    VideoClip clip;
    clip.t = t;
    clip.h = h;
    clip.w = w;
    clip.colorspace = Colorspace::grayscale;
    clip.source_fps = fps;
    clip.frames.resize(clip.pixel_count());
    SplitMix64 rng(seed);
    for (auto& px : clip.frames) px = static_cast<uint8_t>(rng.next_below(256));
    return clip;
}

// A bright square of side `block` on a dark background, moving `dx` pixels
// per frame horizontally (positive = rightward) at vertical offset `row0`.
// Motion wraps around the right/left edge.
inline VideoClip moving_block_clip(int t, int h, int w, int block, int row0, int col0, int dx,
                                   double fps = 30.0) {
    VideoClip clip;
    clip.t = t;
    clip.h = h;
    clip.w = w;
    clip.colorspace = Colorspace::grayscale;
    clip.source_fps = fps;
    clip.frames.assign(clip.pixel_count(), 20);
    for (int f = 0; f < t; ++f) {
        int left = ((col0 + f * dx) % w + w) % w;
        for (int y = row0; y < row0 + block && y < h; ++y)
            for (int k = 0; k < block; ++k) {
                int x = (left + k) % w;
                clip.frames[(static_cast<std::size_t>(f) * h + y) * w + x] = 230;
            }
    }
    return clip;
}

}  // namespace mgtc
