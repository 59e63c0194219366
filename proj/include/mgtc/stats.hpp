#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "mgtc/baselines.hpp"
#include "mgtc/errors.hpp"
#include "mgtc/mgtc.hpp"
#include "mgtc/tokenizer.hpp"

namespace mgtc {

struct ResidualHistogram {
    std::vector<double> bin_edges;  // monotone; bin k covers [edges[k], edges[k+1])
    std::vector<long> counts;
    long total = 0;
    double epsilon = 1.0;
    double near_zero_fraction = 0.0;
};

// Bins: one linear near-zero bin [0, eps), log-spaced bins from eps to 255^2,
// and a catch-all to +inf. A documented default, not a replication of any
// published figure's axes.
inline ResidualHistogram residual_histogram(const std::vector<const VideoClip*>& clips,
                                            CubeShape shape, double epsilon,
                                            int log_bins = 32) {
    if (clips.empty()) throw ConfigError("residual_histogram needs at least one clip");
    if (epsilon < 0.0) throw ConfigError("epsilon must be non-negative");

    ResidualHistogram hist;
    hist.epsilon = epsilon;
    double eps = epsilon > 0.0 ? epsilon : 1e-6;
    double top = 255.0 * 255.0;
    hist.bin_edges.push_back(0.0);
    hist.bin_edges.push_back(eps);
    double ratio = std::pow(top / eps, 1.0 / log_bins);
    for (int b = 1; b <= log_bins; ++b) hist.bin_edges.push_back(eps * std::pow(ratio, b));
    hist.bin_edges.push_back(std::numeric_limits<double>::infinity());
    hist.counts.assign(hist.bin_edges.size() - 1, 0);

    long near_zero = 0;
    for (std::size_t ci = 0; ci < clips.size(); ++ci) {
        const VideoClip* clip = clips[ci];
        CubeGrid grid = [&] {
            try {
                return tokenize(*clip, shape);
            } catch (const ShapeError& e) {
                throw ShapeError("clip " + std::to_string(ci) + ": " + e.what());
            }
        }();
        ResidualField field = compute_residuals(grid);
        for (double d : field.values) {
            if (d < epsilon) ++near_zero;
            auto it = std::upper_bound(hist.bin_edges.begin(), hist.bin_edges.end(), d);
            std::size_t bin = static_cast<std::size_t>(it - hist.bin_edges.begin());
            bin = bin == 0 ? 0 : std::min(bin - 1, hist.counts.size() - 1);
            ++hist.counts[bin];
            ++hist.total;
        }
    }
    hist.near_zero_fraction = static_cast<double>(near_zero) / static_cast<double>(hist.total);
    return hist;
}

struct StrategyRecord {
    std::string strategy;
    double ratio = 0.0;
    double kept_motion_energy_fraction = 1.0;
    double reconstruction_proxy_error = 0.0;
};

struct CompareSummary {
    std::vector<StrategyRecord> records;
};

// Share of total residual energy surviving the mask.
inline double kept_motion_energy_fraction(const ResidualField& field, const TokenMask& mask) {
    double kept = 0.0, total = 0.0;
    for (int i = 0; i < field.t_blocks; ++i)
        for (int j = 0; j < field.s_blocks; ++j) {
            double d = field.at(i, j);
            total += d;
            if (mask.kept(i, j)) kept += d;
        }
    return total > 0.0 ? kept / total : 1.0;
}

namespace detail {

inline double cube_mse(const CubeGrid& grid, int i0, int j, int i1) {
    auto a = grid.cube_pixels(i0, j);
    auto b = grid.cube_pixels(i1, j);
    double acc = 0.0;
    for (std::size_t p = 0; p < a.size(); ++p) {
        double d = static_cast<double>(a[p]) - static_cast<double>(b[p]);
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

}  // namespace detail

// Mean MSE of each masked cube against its nearest kept temporal neighbor at
// the same spatial index (ties toward the earlier index). Columns with no
// kept cube at all fall back to the MSE against the column's per-pixel
// temporal mean.
inline double reconstruction_proxy_error(const CubeGrid& grid, const TokenMask& mask) {
    long masked = 0;
    double acc = 0.0;
    for (int j = 0; j < mask.s_blocks; ++j) {
        for (int i = 0; i < mask.t_blocks; ++i) {
            if (mask.kept(i, j)) continue;
            ++masked;
            int best = -1;
            for (int dist = 1; dist < mask.t_blocks; ++dist) {
                if (i - dist >= 0 && mask.kept(i - dist, j)) { best = i - dist; break; }
                if (i + dist < mask.t_blocks && mask.kept(i + dist, j)) { best = i + dist; break; }
            }
            if (best >= 0) {
                acc += detail::cube_mse(grid, i, j, best);
            } else {
                std::vector<double> mean(grid.cube_pixel_count(), 0.0);
                for (int ii = 0; ii < mask.t_blocks; ++ii) {
                    std::size_t p = 0;
                    grid.visit_cube(ii, j, [&](uint8_t v) { mean[p++] += v; });
                }
                for (auto& v : mean) v /= mask.t_blocks;
                double err = 0.0;
                std::size_t p = 0;
                grid.visit_cube(i, j, [&](uint8_t v) {
                    double d = static_cast<double>(v) - mean[p++];
                    err += d * d;
                });
                acc += err / static_cast<double>(mean.size());
            }
        }
    }
    return masked > 0 ? acc / static_cast<double>(masked) : 0.0;
}

// Runs every strategy at every ratio (cell_running only where expressible)
// and records both metrics. Strategy errors propagate annotated with the
// strategy name.
inline CompareSummary compare_strategies(const CubeGrid& grid,
                                         const std::vector<double>& ratios, uint64_t seed) {
    ResidualField field = compute_residuals(grid);
    CompareSummary summary;

    auto add = [&](const char* name, double ratio, auto make_mask) {
        StrategyRecord rec;
        rec.strategy = name;
        rec.ratio = ratio;
        try {
            TokenMask mask = make_mask();
            rec.kept_motion_energy_fraction = kept_motion_energy_fraction(field, mask);
            rec.reconstruction_proxy_error = reconstruction_proxy_error(grid, mask);
        } catch (const std::exception& e) {
            throw ConfigError(std::string(name) + ": " + e.what());
        }
        summary.records.push_back(rec);
    };

    bool cell_ok = grid.spatial_rows() % 2 == 0 && grid.spatial_cols() % 2 == 0;
    for (double ratio : ratios) {
        add("mgtc", ratio, [&] { return mgtc_mask(grid, ratio, MaskMode::eval); });
        add("random", ratio, [&] { return random_mask(grid, ratio, seed); });
        add("tube", ratio, [&] { return tube_mask(grid, ratio, seed); });
        bool expressible = std::abs(ratio - 0.25) < 1e-12 || std::abs(ratio - 0.5) < 1e-12 ||
                           std::abs(ratio - 0.75) < 1e-12;
        if (cell_ok && expressible)
            add("cell_running", ratio, [&] { return cell_running_mask(grid, ratio); });
    }
    return summary;
}

inline constexpr int kReportVersion = 1;

inline nlohmann::json histogram_to_json(const ResidualHistogram& hist) {
    return {{"version", kReportVersion},
            {"kind", "residual_histogram"},
            {"bin_edges", hist.bin_edges},
            {"counts", hist.counts},
            {"total", hist.total},
            {"epsilon", hist.epsilon},
            {"near_zero_fraction", hist.near_zero_fraction}};
}

inline ResidualHistogram histogram_from_json(const nlohmann::json& j) {
    if (j.value("version", -1) != kReportVersion) throw FormatError("unsupported report version");
    ResidualHistogram hist;
    // JSON has no infinity literal; null round-trips the open top edge.
    for (const auto& e : j.at("bin_edges"))
        hist.bin_edges.push_back(e.is_null() ? std::numeric_limits<double>::infinity()
                                             : e.get<double>());
    hist.counts = j.at("counts").get<std::vector<long>>();
    hist.total = j.at("total").get<long>();
    hist.epsilon = j.at("epsilon").get<double>();
    hist.near_zero_fraction = j.at("near_zero_fraction").get<double>();
    return hist;
}

inline nlohmann::json summary_to_json(const CompareSummary& summary) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : summary.records)
        rows.push_back({{"strategy", r.strategy},
                        {"ratio", r.ratio},
                        {"kept_motion_energy_fraction", r.kept_motion_energy_fraction},
                        {"reconstruction_proxy_error", r.reconstruction_proxy_error}});
    return {{"version", kReportVersion}, {"kind", "compare_summary"}, {"records", rows}};
}

inline CompareSummary summary_from_json(const nlohmann::json& j) {
    if (j.value("version", -1) != kReportVersion) throw FormatError("unsupported report version");
    CompareSummary summary;
    for (const auto& row : j.at("records"))
        summary.records.push_back({row.at("strategy").get<std::string>(),
                                   row.at("ratio").get<double>(),
                                   row.at("kept_motion_energy_fraction").get<double>(),
                                   row.at("reconstruction_proxy_error").get<double>()});
    return summary;
}

enum class ReportFormat { json, csv };

inline void emit_report(const ResidualHistogram& hist, const std::string& path,
                        ReportFormat format) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write report: " + path);
    if (format == ReportFormat::json) {
        auto j = histogram_to_json(hist);
        // infinity is not representable in JSON; emit null for the top edge
        for (auto& e : j["bin_edges"])
            if (e.is_number() && std::isinf(e.get<double>())) e = nullptr;
        out << j.dump(2) << "\n";
    } else {
        out << "bin_lo,bin_hi,count\n";
        for (std::size_t b = 0; b < hist.counts.size(); ++b)
            out << hist.bin_edges[b] << "," << hist.bin_edges[b + 1] << "," << hist.counts[b]
                << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

inline void emit_report(const CompareSummary& summary, const std::string& path,
                        ReportFormat format) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write report: " + path);
    if (format == ReportFormat::json) {
        out << summary_to_json(summary).dump(2) << "\n";
    } else {
        out << "strategy,ratio,kept_motion_energy_fraction,reconstruction_proxy_error\n";
        for (const auto& r : summary.records)
            out << r.strategy << "," << r.ratio << "," << r.kept_motion_energy_fraction << ","
                << r.reconstruction_proxy_error << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace mgtc
