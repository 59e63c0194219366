#pragma once

#include <cmath>
#include <string>

#include "mgtc/errors.hpp"

namespace mgtc {

struct EncoderSpec {
    int depth = 12;
    int width = 768;
    double mlp_ratio = 4.0;
    int num_classes = 400;
    int num_heads = 12;  // does not affect FLOPs at this granularity

    static EncoderSpec vit_b(int num_classes = 400) { return {12, 768, 4.0, num_classes, 12}; }
    static EncoderSpec vit_l(int num_classes = 400) { return {24, 1024, 4.0, num_classes, 16}; }

    void validate() const {
        if (depth < 1 || width < 1 || num_classes < 1 || num_heads < 1 || mlp_ratio <= 0.0)
            throw ConfigError("encoder spec fields must be positive");
        if (width % num_heads != 0)
            throw ConfigError("width must be divisible by num_heads");
    }
};

// Analytical per-forward cost, MACs counted as 2 FLOPs (folded into the
// coefficients): per block 4*N*d^2 (qkv + output projection) + 2*N^2*d
// (scores and value mixing) + 2*r*N*d^2 (MLP), plus N*d*num_classes head.
struct FlopsProfile {
    long tokens = 0;
    double qkv_and_proj = 0.0;
    double attention_scores_and_values = 0.0;
    double mlp = 0.0;
    double head = 0.0;
    double total_flops = 0.0;
    double total_gflops = 0.0;
};

inline FlopsProfile estimate_flops(const EncoderSpec& spec, long tokens) {
    spec.validate();
    if (tokens < 0) throw ConfigError("token count must be non-negative");

    double n = static_cast<double>(tokens);
    double d = static_cast<double>(spec.width);
    FlopsProfile p;
    p.tokens = tokens;
    p.qkv_and_proj = 4.0 * n * d * d;
    p.attention_scores_and_values = 2.0 * n * n * d;
    p.mlp = 2.0 * spec.mlp_ratio * n * d * d;
    p.head = n * d * spec.num_classes;
    p.total_flops =
        spec.depth * (p.qkv_and_proj + p.attention_scores_and_values + p.mlp) + p.head;
    p.total_gflops = p.total_flops / 1e9;
    return p;
}

struct SavingsReport {
    long full_tokens = 0;
    long masked_tokens = 0;
    double mask_ratio = 0.0;
    double flops_full = 0.0;    // GFLOPs
    double flops_masked = 0.0;  // GFLOPs
    double relative_saving = 0.0;
};

// Relative saving exceeds the mask ratio whenever tokens drop, because the
// N^2 attention term shrinks quadratically.
inline SavingsReport savings_report(const EncoderSpec& spec, long full_tokens,
                                    double mask_ratio) {
    if (mask_ratio < 0.0 || mask_ratio >= 1.0)
        throw ConfigError("mask ratio must be in [0, 1)");
    SavingsReport r;
    r.full_tokens = full_tokens;
    r.mask_ratio = mask_ratio;
    r.masked_tokens = static_cast<long>(
        std::floor((1.0 - mask_ratio) * static_cast<double>(full_tokens) + 0.5));
    r.flops_full = estimate_flops(spec, full_tokens).total_gflops;
    r.flops_masked = estimate_flops(spec, r.masked_tokens).total_gflops;
    r.relative_saving = r.flops_full > 0.0 ? 1.0 - r.flops_masked / r.flops_full : 0.0;
    return r;
}

}  // namespace mgtc
