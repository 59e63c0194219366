#pragma once

#include <bit>
#include <cstring>
#include <fstream>
#include <string>

#include <json.hpp>

#include "mgtc/errors.hpp"
#include "mgtc/toy_transformer.hpp"

namespace mgtc {

inline constexpr int kSnapshotVersion = 1;

// Parameter snapshot: flat little-endian f64 blob plus a JSON shape manifest.
inline void save_params(const ModelParams& params, const std::string& blob_path,
                        const std::string& manifest_path) {
    static_assert(std::endian::native == std::endian::little,
                  "snapshot writer assumes a little-endian host");
    std::ofstream blob(blob_path, std::ios::binary | std::ios::trunc);
    if (!blob) throw IoError("cannot write: " + blob_path);
    blob.write(reinterpret_cast<const char*>(params.flat().data()),
               static_cast<std::streamsize>(params.flat().size() * sizeof(double)));
    if (!blob) throw IoError("write failed: " + blob_path);

    nlohmann::json tensors = nlohmann::json::array();
    for (const auto& t : params.layout())
        tensors.push_back({{"name", t.name}, {"dims", t.dims}});
    nlohmann::json manifest{{"version", kSnapshotVersion},
                            {"dtype", "f64le"},
                            {"depth", params.spec().depth},
                            {"width", params.spec().width},
                            {"mlp_ratio", params.spec().mlp_ratio},
                            {"num_classes", params.spec().num_classes},
                            {"num_heads", params.spec().num_heads},
                            {"t_blocks", params.lattice().t_blocks},
                            {"s_blocks", params.lattice().s_blocks},
                            {"in_dim", params.in_dim()},
                            {"tensors", tensors}};
    std::ofstream mf(manifest_path, std::ios::trunc);
    if (!mf) throw IoError("cannot write: " + manifest_path);
    mf << manifest.dump(2) << "\n";
}

inline ModelParams load_params(const std::string& blob_path, const std::string& manifest_path) {
    std::ifstream mf(manifest_path);
    if (!mf) throw IoError("cannot open: " + manifest_path);
    nlohmann::json manifest;
    try {
        mf >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("manifest is not valid JSON: " + std::string(e.what()));
    }
    if (manifest.value("version", -1) != kSnapshotVersion)
        throw FormatError("unsupported snapshot version");
    if (manifest.value("dtype", "") != "f64le") throw FormatError("unsupported snapshot dtype");

    EncoderSpec spec{manifest.at("depth").get<int>(), manifest.at("width").get<int>(),
                     manifest.at("mlp_ratio").get<double>(),
                     manifest.at("num_classes").get<int>(), manifest.at("num_heads").get<int>()};
    LatticeDims lattice{manifest.at("t_blocks").get<int>(), manifest.at("s_blocks").get<int>()};
    ModelParams params(spec, lattice, manifest.at("in_dim").get<int>());

    // layout is derived, manifest shapes are a consistency check
    const auto& tensors = manifest.at("tensors");
    if (tensors.size() != params.layout().size())
        throw FormatError("manifest tensor count mismatch");
    for (std::size_t idx = 0; idx < tensors.size(); ++idx) {
        const auto& t = params.layout()[idx];
        if (tensors[idx].at("name").get<std::string>() != t.name ||
            tensors[idx].at("dims").get<std::vector<long>>() != t.dims)
            throw FormatError("manifest tensor mismatch at " + t.name);
    }

    std::ifstream blob(blob_path, std::ios::binary);
    if (!blob) throw IoError("cannot open: " + blob_path);
    std::size_t bytes = params.flat().size() * sizeof(double);
    blob.read(reinterpret_cast<char*>(params.flat().data()),
              static_cast<std::streamsize>(bytes));
    if (static_cast<std::size_t>(blob.gcount()) != bytes)
        throw TruncationError("snapshot blob shorter than manifest describes");
    return params;
}

}  // namespace mgtc
