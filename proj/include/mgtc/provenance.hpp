#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include <json.hpp>

#include "mgtc/errors.hpp"

namespace mgtc {

inline constexpr const char* kLibraryVersion = "0.1.0";

// FNV-1a 64-bit over the file's bytes; cheap, dependency-free content hash
// for provenance records (not cryptographic).
inline std::string fnv1a64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for hashing: " + path);
    uint64_t hash = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize k = 0; k < in.gcount(); ++k) {
            hash ^= static_cast<unsigned char>(buf[k]);
            hash *= 0x100000001b3ULL;
        }
    }
    std::ostringstream out;
    out << std::hex << std::setfill('0') << std::setw(16) << hash;
    return out.str();
}

// temp file + rename so readers never observe a partial write
inline void atomic_write_text(const std::string& path, const std::string& contents) {
    namespace fs = std::filesystem;
    fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write: " + tmp.string());
        out << contents;
        if (!out) throw IoError("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot rename into place: " + path);
    }
}

inline nlohmann::json provenance_block(const nlohmann::json& config,
                                       const std::string& input_path) {
    return {{"library_version", kLibraryVersion},
            {"config", config},
            {"input", input_path},
            {"input_hash_fnv1a64", fnv1a64_file(input_path)}};
}

}  // namespace mgtc
