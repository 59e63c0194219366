#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mgtc/errors.hpp"
#include "mgtc/video.hpp"

namespace mgtc {

namespace detail {

enum class ChromaMode { c420, c422, c444 };

struct Y4mHeader {
    int width = -1;
    int height = -1;
    int fps_num = -1;
    int fps_den = -1;
    ChromaMode chroma = ChromaMode::c420;  // Y4M default when the C tag is absent
};

inline Y4mHeader parse_y4m_header(const std::string& line) {
    std::istringstream ss(line);
    std::string magic;
    ss >> magic;
    if (magic != "YUV4MPEG2") throw FormatError("not a YUV4MPEG2 stream");

    Y4mHeader hdr;
    std::string tag;
    while (ss >> tag) {
        if (tag.empty()) continue;
        char key = tag[0];
        std::string val = tag.substr(1);
        switch (key) {
            case 'W':
                hdr.width = std::stoi(val);
                break;
            case 'H':
                hdr.height = std::stoi(val);
                break;
            case 'F': {
                auto colon = val.find(':');
                if (colon == std::string::npos)
                    throw FormatError("malformed F tag: " + tag);
                hdr.fps_num = std::stoi(val.substr(0, colon));
                hdr.fps_den = std::stoi(val.substr(colon + 1));
                break;
            }
            case 'C':
                if (val.rfind("420", 0) == 0)
                    hdr.chroma = ChromaMode::c420;
                else if (val == "422")
                    hdr.chroma = ChromaMode::c422;
                else if (val == "444")
                    hdr.chroma = ChromaMode::c444;
                else
                    throw UnsupportedFormatError("unsupported chroma mode C" + val);
                break;
            default:
                break;  // Ip, A, X... tags ignored
        }
    }
    if (hdr.width <= 0) throw FormatError("Y4M header missing W tag");
    if (hdr.height <= 0) throw FormatError("Y4M header missing H tag");
    if (hdr.fps_num <= 0 || hdr.fps_den <= 0)
        throw FormatError("Y4M header missing or invalid F tag");
    return hdr;
}

inline uint8_t clamp_round(double v) {
    double r = std::floor(v + 0.5);  // round half up
    if (r < 0.0) return 0;
    if (r > 255.0) return 255;
    return static_cast<uint8_t>(r);
}

// BT.601 full-range YCbCr -> RGB, nearest-neighbor chroma upsampling.
inline void ycbcr_frame_to_rgb(const std::vector<uint8_t>& y, const std::vector<uint8_t>& cb,
                               const std::vector<uint8_t>& cr, int w, int h, ChromaMode mode,
                               uint8_t* out) {
    int cw = mode == ChromaMode::c444 ? w : (w + 1) / 2;
    for (int row = 0; row < h; ++row) {
        int crow = mode == ChromaMode::c420 ? row / 2 : row;
        for (int col = 0; col < w; ++col) {
            int ccol = mode == ChromaMode::c444 ? col : col / 2;
            double Y = y[static_cast<std::size_t>(row) * w + col];
            double Cb = cb[static_cast<std::size_t>(crow) * cw + ccol] - 128.0;
            double Cr = cr[static_cast<std::size_t>(crow) * cw + ccol] - 128.0;
            uint8_t* px = out + (static_cast<std::size_t>(row) * w + col) * 3;
            px[0] = clamp_round(Y + 1.402 * Cr);
            px[1] = clamp_round(Y - 0.344136 * Cb - 0.714136 * Cr);
            px[2] = clamp_round(Y + 1.772 * Cb);
        }
    }
}

}  // namespace detail

// Reads a YUV4MPEG2 stream into an RGB clip. Accepts 4:2:0, 4:2:2 and 4:4:4
// chroma; conversion is BT.601 full range with nearest-neighbor upsampling.
inline VideoClip load_y4m(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);

    std::string header_line;
    if (!std::getline(in, header_line)) throw FormatError("empty file: " + path);
    auto hdr = detail::parse_y4m_header(header_line);

    int w = hdr.width, h = hdr.height;
    int cw = hdr.chroma == detail::ChromaMode::c444 ? w : (w + 1) / 2;
    int ch = hdr.chroma == detail::ChromaMode::c420 ? (h + 1) / 2 : h;
    std::size_t y_len = static_cast<std::size_t>(w) * h;
    std::size_t c_len = static_cast<std::size_t>(cw) * ch;

    VideoClip clip;
    clip.h = h;
    clip.w = w;
    clip.colorspace = Colorspace::rgb;
    clip.source_fps = static_cast<double>(hdr.fps_num) / hdr.fps_den;

    std::vector<uint8_t> yp(y_len), cbp(c_len), crp(c_len);
    int frame_index = 0;
    std::string frame_line;
    while (std::getline(in, frame_line)) {
        if (frame_line.rfind("FRAME", 0) != 0)
            throw FormatError("expected FRAME delimiter before frame " +
                              std::to_string(frame_index));
        auto read_plane = [&](std::vector<uint8_t>& p) {
            in.read(reinterpret_cast<char*>(p.data()), static_cast<std::streamsize>(p.size()));
            if (static_cast<std::size_t>(in.gcount()) != p.size())
                throw TruncationError("truncated payload at frame " +
                                      std::to_string(frame_index));
        };
        read_plane(yp);
        read_plane(cbp);
        read_plane(crp);

        clip.frames.resize(clip.frames.size() + y_len * 3);
        uint8_t* out = clip.frames.data() + static_cast<std::size_t>(frame_index) * y_len * 3;
        detail::ycbcr_frame_to_rgb(yp, cbp, crp, w, h, hdr.chroma, out);
        ++frame_index;
    }
    if (frame_index == 0) throw FormatError("stream contains no frames: " + path);
    clip.t = frame_index;
    clip.validate();
    return clip;
}

}  // namespace mgtc
