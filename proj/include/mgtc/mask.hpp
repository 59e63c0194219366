#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mgtc/errors.hpp"

namespace mgtc {

enum class MaskStrategy { mgtc, random, tube, cell_running };

inline std::string to_string(MaskStrategy s) {
    switch (s) {
        case MaskStrategy::mgtc: return "mgtc";
        case MaskStrategy::random: return "random";
        case MaskStrategy::tube: return "tube";
        case MaskStrategy::cell_running: return "cell_running";
    }
    return "?";
}

inline MaskStrategy strategy_from_string(const std::string& s) {
    if (s == "mgtc") return MaskStrategy::mgtc;
    if (s == "random") return MaskStrategy::random;
    if (s == "tube") return MaskStrategy::tube;
    if (s == "cell_running") return MaskStrategy::cell_running;
    throw ConfigError("unknown mask strategy: " + s);
}

// Keep/mask decision per cube plus provenance. keep[i * s_blocks + j] == true
// means cube (i, j) is fed to the model.
struct TokenMask {
    std::vector<bool> keep;
    int t_blocks = 0;
    int s_blocks = 0;
    double ratio_requested = 0.0;
    std::optional<int> key_frame_index;
    MaskStrategy strategy = MaskStrategy::mgtc;
    std::optional<uint64_t> seed;
    double threshold_lambda = 0.0;

    long total() const { return static_cast<long>(t_blocks) * s_blocks; }
    bool kept(int i, int j) const { return keep[static_cast<std::size_t>(i) * s_blocks + j]; }
    long masked_count() const {
        long m = 0;
        for (bool k : keep)
            if (!k) ++m;
        return m;
    }
    long kept_count() const { return total() - masked_count(); }
};

namespace detail {

inline const char* b64_alphabet() {
    return "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

inline std::string base64_encode(const std::vector<uint8_t>& bytes) {
    const char* tab = b64_alphabet();
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 3 <= bytes.size(); i += 3) {
        uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        out += tab[(v >> 18) & 63];
        out += tab[(v >> 12) & 63];
        out += tab[(v >> 6) & 63];
        out += tab[v & 63];
    }
    std::size_t rem = bytes.size() - i;
    if (rem == 1) {
        uint32_t v = bytes[i] << 16;
        out += tab[(v >> 18) & 63];
        out += tab[(v >> 12) & 63];
        out += "==";
    } else if (rem == 2) {
        uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
        out += tab[(v >> 18) & 63];
        out += tab[(v >> 12) & 63];
        out += tab[(v >> 6) & 63];
        out += '=';
    }
    return out;
}

inline std::vector<uint8_t> base64_decode(const std::string& text) {
    int rev[256];
    for (int& r : rev) r = -1;
    const char* tab = b64_alphabet();
    for (int k = 0; k < 64; ++k) rev[static_cast<unsigned char>(tab[k])] = k;

    std::vector<uint8_t> out;
    uint32_t buf = 0;
    int bits = 0;
    for (char ch : text) {
        if (ch == '=') break;
        int v = rev[static_cast<unsigned char>(ch)];
        if (v < 0) throw FormatError("invalid base64 character in keep_bitmap");
        buf = (buf << 6) | static_cast<uint32_t>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<uint8_t>((buf >> bits) & 0xff));
        }
    }
    return out;
}

}  // namespace detail

inline constexpr int kMaskFormatVersion = 1;

// Serialization contract: keep_bitmap is base64 of a little-endian bit array
// in (i-major, j-minor) order, zero padded to a whole byte.
inline nlohmann::json mask_to_json(const TokenMask& mask) {
    std::vector<uint8_t> bytes((mask.keep.size() + 7) / 8, 0);
    for (std::size_t b = 0; b < mask.keep.size(); ++b)
        if (mask.keep[b]) bytes[b / 8] |= static_cast<uint8_t>(1u << (b % 8));

    nlohmann::json j{{"version", kMaskFormatVersion},
                     {"strategy", to_string(mask.strategy)},
                     {"ratio", mask.ratio_requested},
                     {"L", mask.total()},
                     {"t_blocks", mask.t_blocks},
                     {"s_blocks", mask.s_blocks},
                     {"lambda", mask.threshold_lambda},
                     {"keep_bitmap", detail::base64_encode(bytes)}};
    j["key_frame_index"] =
        mask.key_frame_index ? nlohmann::json(*mask.key_frame_index) : nlohmann::json(nullptr);
    j["seed"] = mask.seed ? nlohmann::json(*mask.seed) : nlohmann::json(nullptr);
    return j;
}

inline TokenMask mask_from_json(const nlohmann::json& j) {
    if (j.value("version", -1) != kMaskFormatVersion)
        throw FormatError("unsupported mask file version");
    TokenMask mask;
    mask.strategy = strategy_from_string(j.at("strategy").get<std::string>());
    mask.ratio_requested = j.at("ratio").get<double>();
    mask.t_blocks = j.at("t_blocks").get<int>();
    mask.s_blocks = j.at("s_blocks").get<int>();
    mask.threshold_lambda = j.at("lambda").get<double>();
    if (!j.at("key_frame_index").is_null()) mask.key_frame_index = j["key_frame_index"].get<int>();
    if (!j.at("seed").is_null()) mask.seed = j["seed"].get<uint64_t>();

    long L = static_cast<long>(mask.t_blocks) * mask.s_blocks;
    if (j.at("L").get<long>() != L) throw FormatError("mask L inconsistent with lattice dims");
    auto bytes = detail::base64_decode(j.at("keep_bitmap").get<std::string>());
    if (bytes.size() < static_cast<std::size_t>((L + 7) / 8))
        throw TruncationError("keep_bitmap shorter than lattice");
    mask.keep.resize(L);
    for (long b = 0; b < L; ++b) mask.keep[b] = (bytes[b / 8] >> (b % 8)) & 1u;
    return mask;
}

}  // namespace mgtc
