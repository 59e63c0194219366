#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mgtc/errors.hpp"

namespace mgtc {

enum class Colorspace { grayscale, rgb };

inline int channels_of(Colorspace cs) { return cs == Colorspace::grayscale ? 1 : 3; }

// Dense T x H x W x C frame stack, values in [0, 255] stored as u8.
struct VideoClip {
    std::vector<uint8_t> frames;
    int t = 0;
    int h = 0;
    int w = 0;
    Colorspace colorspace = Colorspace::grayscale;
    double source_fps = 0.0;

    int channels() const { return channels_of(colorspace); }
    std::size_t frame_size() const {
        return static_cast<std::size_t>(h) * w * channels();
    }
    std::size_t pixel_count() const { return static_cast<std::size_t>(t) * frame_size(); }

    uint8_t at(int ti, int y, int x, int c) const {
        return frames[((static_cast<std::size_t>(ti) * h + y) * w + x) * channels() + c];
    }

    void validate() const {
        if (t < 1 || h < 1 || w < 1)
            throw ShapeError("clip dimensions must be positive, got T=" + std::to_string(t) +
                             " H=" + std::to_string(h) + " W=" + std::to_string(w));
        if (source_fps <= 0.0)
            throw FormatError("source_fps must be positive");
        if (frames.size() != pixel_count())
            throw ShapeError("frame buffer size mismatch");
    }
};

struct ClipSpec {
    double target_fps = 0.0;
    int num_frames = 0;
    int start_offset = 0;
};

// Number of source frames this request consumes: offset + ceil(num_frames * src/target).
inline long required_source_span(const VideoClip& clip, const ClipSpec& spec) {
    double span = static_cast<double>(spec.num_frames) * clip.source_fps / spec.target_fps;
    return spec.start_offset + static_cast<long>(std::ceil(span - 1e-9));
}

// Nearest-index sampling at stride source_fps / target_fps, round half up.
// No pixel interpolation: every output frame is a verbatim source frame.
inline VideoClip resample_fps(const VideoClip& clip, const ClipSpec& spec) {
    clip.validate();
    if (spec.target_fps <= 0.0) throw ConfigError("target_fps must be positive");
    if (spec.num_frames < 1) throw ConfigError("num_frames must be positive");
    if (spec.start_offset < 0) throw ConfigError("start_offset must be non-negative");

    long need = required_source_span(clip, spec);
    if (need > clip.t)
        throw BoundsError("resample span out of range: needs " + std::to_string(need) +
                          " source frames, clip has " + std::to_string(clip.t));

    double stride = clip.source_fps / spec.target_fps;
    VideoClip out;
    out.t = spec.num_frames;
    out.h = clip.h;
    out.w = clip.w;
    out.colorspace = clip.colorspace;
    out.source_fps = spec.target_fps;
    out.frames.resize(out.pixel_count());

    std::size_t fsz = clip.frame_size();
    for (int k = 0; k < spec.num_frames; ++k) {
        long idx = spec.start_offset + static_cast<long>(std::floor(k * stride + 0.5));
        if (idx >= clip.t) idx = clip.t - 1;  // guard against fp drift at the span edge
        std::copy_n(clip.frames.data() + static_cast<std::size_t>(idx) * fsz, fsz,
                    out.frames.data() + static_cast<std::size_t>(k) * fsz);
    }
    return out;
}

}  // namespace mgtc
