#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "mgtc/errors.hpp"
#include "mgtc/video.hpp"

namespace mgtc {

// Raw format: flat u8 file in T-major, row-major, channel-interleaved order,
// described by a JSON sidecar {width, height, channels, frame_count, fps, dtype}.

inline VideoClip load_raw(const std::string& path, const std::string& sidecar_path) {
    std::ifstream side(sidecar_path);
    if (!side) throw IoError("cannot open sidecar: " + sidecar_path);
    nlohmann::json meta;
    try {
        side >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("sidecar is not valid JSON: " + std::string(e.what()));
    }

    auto require_int = [&](const char* key) -> long {
        if (!meta.contains(key) || !meta[key].is_number_integer())
            throw FormatError("sidecar missing integer field '" + std::string(key) + "'");
        return meta[key].get<long>();
    };
    long w = require_int("width");
    long h = require_int("height");
    long c = require_int("channels");
    long n = require_int("frame_count");
    if (!meta.contains("fps") || !meta["fps"].is_number())
        throw FormatError("sidecar missing numeric field 'fps'");
    double fps = meta["fps"].get<double>();
    std::string dtype = meta.value("dtype", "");

    if (dtype != "u8") throw FormatError("sidecar dtype must be u8, got '" + dtype + "'");
    if (c != 1 && c != 3) throw FormatError("sidecar channels must be 1 or 3, got " + std::to_string(c));
    if (w < 1 || h < 1 || n < 1) throw FormatError("sidecar dimensions must be positive");
    if (fps <= 0.0) throw FormatError("sidecar fps must be positive");

    std::uintmax_t expected = static_cast<std::uintmax_t>(n) * h * w * c;
    std::error_code ec;
    std::uintmax_t actual = std::filesystem::file_size(path, ec);
    if (ec) throw IoError("cannot stat raw file: " + path);
    if (actual != expected)
        throw TruncationError("raw file size mismatch: expected " + std::to_string(expected) +
                              " bytes, got " + std::to_string(actual));

    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open raw file: " + path);

    VideoClip clip;
    clip.t = static_cast<int>(n);
    clip.h = static_cast<int>(h);
    clip.w = static_cast<int>(w);
    clip.colorspace = c == 1 ? Colorspace::grayscale : Colorspace::rgb;
    clip.source_fps = fps;
    clip.frames.resize(expected);
    in.read(reinterpret_cast<char*>(clip.frames.data()), static_cast<std::streamsize>(expected));
    if (static_cast<std::uintmax_t>(in.gcount()) != expected)
        throw TruncationError("short read from raw file: " + path);
    return clip;
}

inline void write_raw(const VideoClip& clip, const std::string& path,
                      const std::string& sidecar_path) {
    clip.validate();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write raw file: " + path);
    out.write(reinterpret_cast<const char*>(clip.frames.data()),
              static_cast<std::streamsize>(clip.frames.size()));
    if (!out) throw IoError("write failed: " + path);

    nlohmann::json meta{{"width", clip.w},
                        {"height", clip.h},
                        {"channels", clip.channels()},
                        {"frame_count", clip.t},
                        {"fps", clip.source_fps},
                        {"dtype", "u8"}};
    std::ofstream side(sidecar_path, std::ios::trunc);
    if (!side) throw IoError("cannot write sidecar: " + sidecar_path);
    side << meta.dump(2) << "\n";
}

}  // namespace mgtc
