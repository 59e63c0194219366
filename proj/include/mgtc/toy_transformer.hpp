#pragma once

#include <cmath>
#include <cstring>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mgtc/errors.hpp"
#include "mgtc/flops.hpp"
#include "mgtc/mask.hpp"
#include "mgtc/rng.hpp"
#include "mgtc/tokenizer.hpp"

namespace mgtc {

struct LatticeDims {
    int t_blocks = 0;
    int s_blocks = 0;
};

struct TensorSpec {
    std::string name;
    std::vector<long> dims;
    std::size_t offset = 0;
    std::size_t size = 0;
};

// All parameters live in one flat f64 buffer with a named-tensor layout;
// this doubles as the snapshot format and keeps finite-difference probing
// trivial. Weight matrices are row-major (out, in).
class ModelParams {
public:
    ModelParams(const EncoderSpec& spec, LatticeDims lattice, int in_dim)
        : spec_(spec), lattice_(lattice), in_dim_(in_dim) {
        spec.validate();
        if (lattice.t_blocks < 1 || lattice.s_blocks < 1 || in_dim < 1)
            throw ConfigError("lattice and input dims must be positive");
        long d = spec.width;
        long hidden = static_cast<long>(spec.mlp_ratio * d);
        add("embed.w", {d, in_dim});
        add("embed.b", {d});
        add("pos.temporal", {lattice.t_blocks, d});
        add("pos.spatial", {lattice.s_blocks, d});
        add("cls", {d});
        for (int b = 0; b < spec.depth; ++b) {
            std::string p = "block" + std::to_string(b) + ".";
            add(p + "ln1.g", {d});
            add(p + "ln1.b", {d});
            add(p + "wq", {d, d});
            add(p + "bq", {d});
            add(p + "wk", {d, d});
            add(p + "bk", {d});
            add(p + "wv", {d, d});
            add(p + "bv", {d});
            add(p + "wo", {d, d});
            add(p + "bo", {d});
            add(p + "ln2.g", {d});
            add(p + "ln2.b", {d});
            add(p + "mlp.w1", {hidden, d});
            add(p + "mlp.b1", {hidden});
            add(p + "mlp.w2", {d, hidden});
            add(p + "mlp.b2", {d});
        }
        add("final_ln.g", {d});
        add("final_ln.b", {d});
        add("head.w", {spec.num_classes, d});
        add("head.b", {spec.num_classes});
        flat_.assign(total_, 0.0);
    }

    const EncoderSpec& spec() const { return spec_; }
    LatticeDims lattice() const { return lattice_; }
    int in_dim() const { return in_dim_; }
    const std::vector<TensorSpec>& layout() const { return layout_; }
    std::vector<double>& flat() { return flat_; }
    const std::vector<double>& flat() const { return flat_; }

    double* tensor(const std::string& name) { return flat_.data() + find(name).offset; }
    const double* tensor(const std::string& name) const {
        return flat_.data() + find(name).offset;
    }
    const TensorSpec& find(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw ConfigError("unknown tensor: " + name);
        return layout_[it->second];
    }

private:
    void add(const std::string& name, std::vector<long> dims) {
        std::size_t size = 1;
        for (long dim : dims) size *= static_cast<std::size_t>(dim);
        index_[name] = layout_.size();
        layout_.push_back({name, std::move(dims), total_, size});
        total_ += size;
    }

    EncoderSpec spec_;
    LatticeDims lattice_;
    int in_dim_;
    std::vector<TensorSpec> layout_;
    std::map<std::string, std::size_t> index_;
    std::size_t total_ = 0;
    std::vector<double> flat_;
};

// Scaled-uniform init, bound 1/sqrt(fan_in); positional tables zero, layer
// norm gains one, biases zero. Deterministic from the seed.
inline ModelParams init_params(const EncoderSpec& spec, LatticeDims lattice, int in_dim,
                               uint64_t seed) {
    ModelParams params(spec, lattice, in_dim);
    SplitMix64 rng(seed);
    for (const auto& t : params.layout()) {
        double* p = params.flat().data() + t.offset;
        bool is_gain = t.name.size() >= 2 && t.name.substr(t.name.size() - 2) == ".g";
        bool is_weight = t.dims.size() == 2 && t.name.rfind("pos.", 0) != 0;
        bool is_cls = t.name == "cls";
        if (is_gain) {
            std::fill(p, p + t.size, 1.0);
        } else if (is_weight || is_cls) {
            long fan_in = is_cls ? spec.width : t.dims.back();
            double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
            for (std::size_t k = 0; k < t.size; ++k)
                p[k] = (2.0 * rng.next_double() - 1.0) * bound;
        }
        // biases and positional tables stay zero
    }
    return params;
}

// Kept tokens for one clip: flattened cube pixels normalized to [0, 1] plus
// their absolute lattice coordinates.
struct TokenBatch {
    std::vector<double> features;  // n x in_dim
    std::vector<std::pair<int, int>> positions;
    int in_dim = 0;

    int n() const { return static_cast<int>(positions.size()); }

    void validate(LatticeDims lattice) const {
        if (positions.empty()) throw ConfigError("token batch must be non-empty");
        if (features.size() != static_cast<std::size_t>(n()) * in_dim)
            throw ShapeError("token batch feature buffer mismatch");
        std::set<std::pair<int, int>> seen;
        for (auto [i, j] : positions) {
            if (i < 0 || i >= lattice.t_blocks || j < 0 || j >= lattice.s_blocks)
                throw BoundsError("token position outside lattice");
            if (!seen.insert({i, j}).second) throw ConfigError("duplicate token position");
        }
        for (double v : features)
            if (!std::isfinite(v)) throw NumericError("non-finite token feature");
    }
};

inline TokenBatch make_token_batch(const CubeGrid& grid, const TokenMask& mask) {
    if (mask.t_blocks != grid.t_blocks() || mask.s_blocks != grid.s_blocks())
        throw ShapeError("mask lattice does not match grid");
    TokenBatch batch;
    batch.in_dim = static_cast<int>(grid.cube_pixel_count());
    for (int i = 0; i < grid.t_blocks(); ++i) {
        for (int j = 0; j < grid.s_blocks(); ++j) {
            if (!mask.kept(i, j)) continue;
            batch.positions.emplace_back(i, j);
            grid.visit_cube(i, j, [&](uint8_t v) {
                batch.features.push_back(static_cast<double>(v) / 255.0);
            });
        }
    }
    return batch;
}

namespace nn {

// y (m x n) = x (m x k) * w^T (n x k) + b
inline void linear(const double* x, const double* w, const double* b, double* y, int m,
                   int k, int n) {
    for (int r = 0; r < m; ++r) {
        for (int c = 0; c < n; ++c) {
            double acc = b ? b[c] : 0.0;
            const double* xr = x + static_cast<std::size_t>(r) * k;
            const double* wr = w + static_cast<std::size_t>(c) * k;
            for (int t = 0; t < k; ++t) acc += xr[t] * wr[t];
            y[static_cast<std::size_t>(r) * n + c] = acc;
        }
    }
}

// Gradients of the linear layer above. Accumulates into dw/db; overwrites dx.
inline void linear_backward(const double* x, const double* w, const double* dy, double* dx,
                            double* dw, double* db, int m, int k, int n) {
    if (dx)
        for (int r = 0; r < m; ++r)
            for (int t = 0; t < k; ++t) {
                double acc = 0.0;
                for (int c = 0; c < n; ++c)
                    acc += dy[static_cast<std::size_t>(r) * n + c] *
                           w[static_cast<std::size_t>(c) * k + t];
                dx[static_cast<std::size_t>(r) * k + t] = acc;
            }
    for (int c = 0; c < n; ++c) {
        for (int t = 0; t < k; ++t) {
            double acc = 0.0;
            for (int r = 0; r < m; ++r)
                acc += dy[static_cast<std::size_t>(r) * n + c] *
                       x[static_cast<std::size_t>(r) * k + t];
            dw[static_cast<std::size_t>(c) * k + t] += acc;
        }
        if (db) {
            double acc = 0.0;
            for (int r = 0; r < m; ++r) acc += dy[static_cast<std::size_t>(r) * n + c];
            db[c] += acc;
        }
    }
}

inline constexpr double kLnEps = 1e-8;

struct LayerNormCache {
    std::vector<double> xhat;  // m x d
    std::vector<double> rstd;  // m
};

inline void layer_norm(const double* x, const double* g, const double* b, double* y, int m,
                       int d, LayerNormCache& cache) {
    cache.xhat.resize(static_cast<std::size_t>(m) * d);
    cache.rstd.resize(m);
    for (int r = 0; r < m; ++r) {
        const double* xr = x + static_cast<std::size_t>(r) * d;
        double mu = 0.0;
        for (int c = 0; c < d; ++c) mu += xr[c];
        mu /= d;
        double var = 0.0;
        for (int c = 0; c < d; ++c) var += (xr[c] - mu) * (xr[c] - mu);
        var /= d;
        double rstd = 1.0 / std::sqrt(var + kLnEps);
        cache.rstd[r] = rstd;
        for (int c = 0; c < d; ++c) {
            double xh = (xr[c] - mu) * rstd;
            cache.xhat[static_cast<std::size_t>(r) * d + c] = xh;
            y[static_cast<std::size_t>(r) * d + c] = g[c] * xh + b[c];
        }
    }
}

inline void layer_norm_backward(const double* g, const double* dy, const LayerNormCache& cache,
                                double* dx, double* dg, double* db, int m, int d) {
    for (int r = 0; r < m; ++r) {
        const double* dyr = dy + static_cast<std::size_t>(r) * d;
        const double* xh = cache.xhat.data() + static_cast<std::size_t>(r) * d;
        double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
        for (int c = 0; c < d; ++c) {
            double dxh = dyr[c] * g[c];
            sum_dxhat += dxh;
            sum_dxhat_xhat += dxh * xh[c];
            dg[c] += dyr[c] * xh[c];
            db[c] += dyr[c];
        }
        for (int c = 0; c < d; ++c) {
            double dxh = dyr[c] * g[c];
            dx[static_cast<std::size_t>(r) * d + c] =
                cache.rstd[r] * (dxh - sum_dxhat / d - xh[c] * sum_dxhat_xhat / d);
        }
    }
}

inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

inline double gelu_grad(double x) {
    constexpr double inv_sqrt_2pi = 0.3989422804014327;
    return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))) + x * inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

inline void softmax_rows(double* x, int m, int n) {
    for (int r = 0; r < m; ++r) {
        double* xr = x + static_cast<std::size_t>(r) * n;
        double mx = xr[0];
        for (int c = 1; c < n; ++c) mx = std::max(mx, xr[c]);
        double sum = 0.0;
        for (int c = 0; c < n; ++c) {
            xr[c] = std::exp(xr[c] - mx);
            sum += xr[c];
        }
        for (int c = 0; c < n; ++c) xr[c] /= sum;
    }
}

}  // namespace nn

namespace detail {

struct BlockCache {
    std::vector<double> x_in;  // residual stream entering the block
    nn::LayerNormCache ln1;
    std::vector<double> h1;  // ln1 output
    std::vector<double> q, k, v;
    std::vector<double> attn;  // softmax rows, m x m
    std::vector<double> z;     // attn * v
    std::vector<double> x_mid;
    nn::LayerNormCache ln2;
    std::vector<double> h2;
    std::vector<double> u;  // pre-activation
    std::vector<double> g;  // gelu(u)
};

struct ForwardCache {
    int m = 0;  // tokens + class slot
    std::vector<double> x0;
    std::vector<BlockCache> blocks;
    std::vector<double> x_final;
    nn::LayerNormCache lnf;
    std::vector<double> y;  // final norm of full stream
    std::vector<double> logits;
};

inline void forward_impl(const ModelParams& params, const TokenBatch& batch,
                         ForwardCache& cache) {
    batch.validate(params.lattice());
    if (batch.in_dim != params.in_dim())
        throw ShapeError("token feature dim does not match model");

    const auto& spec = params.spec();
    int d = spec.width;
    int hidden = static_cast<int>(spec.mlp_ratio * d);
    int n = batch.n();
    int m = n + 1;  // class token first
    cache.m = m;
    double scale = 1.0 / std::sqrt(static_cast<double>(d));

    // x0 = [cls; proj(features) + pos_t(i) + pos_s(j)]
    cache.x0.assign(static_cast<std::size_t>(m) * d, 0.0);
    std::memcpy(cache.x0.data(), params.tensor("cls"), sizeof(double) * d);
    nn::linear(batch.features.data(), params.tensor("embed.w"), params.tensor("embed.b"),
               cache.x0.data() + d, n, batch.in_dim, d);
    const double* pos_t = params.tensor("pos.temporal");
    const double* pos_s = params.tensor("pos.spatial");
    for (int t = 0; t < n; ++t) {
        auto [i, j] = batch.positions[t];
        double* row = cache.x0.data() + static_cast<std::size_t>(t + 1) * d;
        for (int c = 0; c < d; ++c)
            row[c] += pos_t[static_cast<std::size_t>(i) * d + c] +
                      pos_s[static_cast<std::size_t>(j) * d + c];
    }

    std::vector<double> x = cache.x0;
    cache.blocks.assign(spec.depth, {});
    for (int b = 0; b < spec.depth; ++b) {
        std::string p = "block" + std::to_string(b) + ".";
        BlockCache& bc = cache.blocks[b];
        bc.x_in = x;

        bc.h1.resize(x.size());
        nn::layer_norm(x.data(), params.tensor(p + "ln1.g"), params.tensor(p + "ln1.b"),
                       bc.h1.data(), m, d, bc.ln1);

        bc.q.resize(x.size());
        bc.k.resize(x.size());
        bc.v.resize(x.size());
        nn::linear(bc.h1.data(), params.tensor(p + "wq"), params.tensor(p + "bq"), bc.q.data(),
                   m, d, d);
        nn::linear(bc.h1.data(), params.tensor(p + "wk"), params.tensor(p + "bk"), bc.k.data(),
                   m, d, d);
        nn::linear(bc.h1.data(), params.tensor(p + "wv"), params.tensor(p + "bv"), bc.v.data(),
                   m, d, d);

        bc.attn.assign(static_cast<std::size_t>(m) * m, 0.0);
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < m; ++c) {
                double acc = 0.0;
                for (int t = 0; t < d; ++t)
                    acc += bc.q[static_cast<std::size_t>(r) * d + t] *
                           bc.k[static_cast<std::size_t>(c) * d + t];
                bc.attn[static_cast<std::size_t>(r) * m + c] = acc * scale;
            }
        nn::softmax_rows(bc.attn.data(), m, m);

        bc.z.assign(x.size(), 0.0);
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < m; ++c) {
                double a = bc.attn[static_cast<std::size_t>(r) * m + c];
                for (int t = 0; t < d; ++t)
                    bc.z[static_cast<std::size_t>(r) * d + t] +=
                        a * bc.v[static_cast<std::size_t>(c) * d + t];
            }

        std::vector<double> attn_out(x.size());
        nn::linear(bc.z.data(), params.tensor(p + "wo"), params.tensor(p + "bo"),
                   attn_out.data(), m, d, d);
        for (std::size_t idx = 0; idx < x.size(); ++idx) x[idx] += attn_out[idx];
        bc.x_mid = x;

        bc.h2.resize(x.size());
        nn::layer_norm(x.data(), params.tensor(p + "ln2.g"), params.tensor(p + "ln2.b"),
                       bc.h2.data(), m, d, bc.ln2);
        bc.u.resize(static_cast<std::size_t>(m) * hidden);
        nn::linear(bc.h2.data(), params.tensor(p + "mlp.w1"), params.tensor(p + "mlp.b1"),
                   bc.u.data(), m, d, hidden);
        bc.g.resize(bc.u.size());
        for (std::size_t idx = 0; idx < bc.u.size(); ++idx) bc.g[idx] = nn::gelu(bc.u[idx]);
        std::vector<double> mlp_out(x.size());
        nn::linear(bc.g.data(), params.tensor(p + "mlp.w2"), params.tensor(p + "mlp.b2"),
                   mlp_out.data(), m, hidden, d);
        for (std::size_t idx = 0; idx < x.size(); ++idx) x[idx] += mlp_out[idx];
    }

    cache.x_final = x;
    cache.y.resize(x.size());
    nn::layer_norm(x.data(), params.tensor("final_ln.g"), params.tensor("final_ln.b"),
                   cache.y.data(), m, d, cache.lnf);
    cache.logits.assign(spec.num_classes, 0.0);
    nn::linear(cache.y.data(), params.tensor("head.w"), params.tensor("head.b"),
               cache.logits.data(), 1, d, spec.num_classes);  // class token row only
    for (double v : cache.logits)
        if (!std::isfinite(v)) throw NumericError("non-finite logit");
}

}  // namespace detail

inline std::vector<double> forward(const ModelParams& params, const TokenBatch& batch) {
    detail::ForwardCache cache;
    detail::forward_impl(params, batch, cache);
    return cache.logits;
}

// Cross-entropy loss and full analytic gradient in the flat parameter layout.
inline double loss_and_grad(const ModelParams& params, const TokenBatch& batch, int target,
                            std::vector<double>* grad_out) {
    const auto& spec = params.spec();
    if (target < 0 || target >= spec.num_classes) throw ConfigError("target class out of range");

    detail::ForwardCache cache;
    detail::forward_impl(params, batch, cache);
    int m = cache.m;
    int d = spec.width;
    int hidden = static_cast<int>(spec.mlp_ratio * d);
    int n = m - 1;

    // log-softmax loss
    double mx = cache.logits[0];
    for (double v : cache.logits) mx = std::max(mx, v);
    double lse = 0.0;
    for (double v : cache.logits) lse += std::exp(v - mx);
    lse = mx + std::log(lse);
    double loss = lse - cache.logits[target];
    if (!std::isfinite(loss)) throw NumericError("non-finite loss");
    if (!grad_out) return loss;

    ModelParams grads(spec, params.lattice(), params.in_dim());  // zeroed flat buffer
    std::vector<double> dlogits(spec.num_classes);
    for (int c = 0; c < spec.num_classes; ++c)
        dlogits[c] = std::exp(cache.logits[c] - lse) - (c == target ? 1.0 : 0.0);

    // head consumes only the class-token row of y
    std::vector<double> dy(static_cast<std::size_t>(m) * d, 0.0);
    nn::linear_backward(cache.y.data(), params.tensor("head.w"), dlogits.data(), dy.data(),
                        grads.tensor("head.w"), grads.tensor("head.b"), 1, d,
                        spec.num_classes);

    std::vector<double> dx(static_cast<std::size_t>(m) * d, 0.0);
    nn::layer_norm_backward(params.tensor("final_ln.g"), dy.data(), cache.lnf, dx.data(),
                            grads.tensor("final_ln.g"), grads.tensor("final_ln.b"), m, d);

    double scale = 1.0 / std::sqrt(static_cast<double>(d));
    std::vector<double> dh2(dx.size()), du(static_cast<std::size_t>(m) * hidden),
        dg(static_cast<std::size_t>(m) * hidden), dz(dx.size()), dattn, dq(dx.size()),
        dk(dx.size()), dv(dx.size()), dh1(dx.size()), tmp(dx.size());
    for (int b = spec.depth - 1; b >= 0; --b) {
        std::string p = "block" + std::to_string(b) + ".";
        const detail::BlockCache& bc = cache.blocks[b];

        // MLP branch: dx is grad wrt block output = grad wrt x_mid (residual)
        // plus path through the MLP.
        nn::linear_backward(bc.g.data(), params.tensor(p + "mlp.w2"), dx.data(), dg.data(),
                            grads.tensor(p + "mlp.w2"), grads.tensor(p + "mlp.b2"), m, hidden,
                            d);
        for (std::size_t idx = 0; idx < du.size(); ++idx)
            du[idx] = dg[idx] * nn::gelu_grad(bc.u[idx]);
        nn::linear_backward(bc.h2.data(), params.tensor(p + "mlp.w1"), du.data(), dh2.data(),
                            grads.tensor(p + "mlp.w1"), grads.tensor(p + "mlp.b1"), m, d,
                            hidden);
        nn::layer_norm_backward(params.tensor(p + "ln2.g"), dh2.data(), bc.ln2, tmp.data(),
                                grads.tensor(p + "ln2.g"), grads.tensor(p + "ln2.b"), m, d);
        for (std::size_t idx = 0; idx < dx.size(); ++idx) dx[idx] += tmp[idx];

        // attention branch
        nn::linear_backward(bc.z.data(), params.tensor(p + "wo"), dx.data(), dz.data(),
                            grads.tensor(p + "wo"), grads.tensor(p + "bo"), m, d, d);
        dattn.assign(static_cast<std::size_t>(m) * m, 0.0);
        std::fill(dv.begin(), dv.end(), 0.0);
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < m; ++c) {
                double acc = 0.0;
                for (int t = 0; t < d; ++t)
                    acc += dz[static_cast<std::size_t>(r) * d + t] *
                           bc.v[static_cast<std::size_t>(c) * d + t];
                dattn[static_cast<std::size_t>(r) * m + c] = acc;
                double a = bc.attn[static_cast<std::size_t>(r) * m + c];
                for (int t = 0; t < d; ++t)
                    dv[static_cast<std::size_t>(c) * d + t] +=
                        a * dz[static_cast<std::size_t>(r) * d + t];
            }
        // softmax jacobian per row, then scaled score grads
        for (int r = 0; r < m; ++r) {
            const double* ar = bc.attn.data() + static_cast<std::size_t>(r) * m;
            double* dar = dattn.data() + static_cast<std::size_t>(r) * m;
            double dot = 0.0;
            for (int c = 0; c < m; ++c) dot += dar[c] * ar[c];
            for (int c = 0; c < m; ++c) dar[c] = ar[c] * (dar[c] - dot) * scale;
        }
        std::fill(dq.begin(), dq.end(), 0.0);
        std::fill(dk.begin(), dk.end(), 0.0);
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < m; ++c) {
                double ds = dattn[static_cast<std::size_t>(r) * m + c];
                for (int t = 0; t < d; ++t) {
                    dq[static_cast<std::size_t>(r) * d + t] +=
                        ds * bc.k[static_cast<std::size_t>(c) * d + t];
                    dk[static_cast<std::size_t>(c) * d + t] +=
                        ds * bc.q[static_cast<std::size_t>(r) * d + t];
                }
            }
        nn::linear_backward(bc.h1.data(), params.tensor(p + "wq"), dq.data(), dh1.data(),
                            grads.tensor(p + "wq"), grads.tensor(p + "bq"), m, d, d);
        nn::linear_backward(bc.h1.data(), params.tensor(p + "wk"), dk.data(), tmp.data(),
                            grads.tensor(p + "wk"), grads.tensor(p + "bk"), m, d, d);
        for (std::size_t idx = 0; idx < dh1.size(); ++idx) dh1[idx] += tmp[idx];
        nn::linear_backward(bc.h1.data(), params.tensor(p + "wv"), dv.data(), tmp.data(),
                            grads.tensor(p + "wv"), grads.tensor(p + "bv"), m, d, d);
        for (std::size_t idx = 0; idx < dh1.size(); ++idx) dh1[idx] += tmp[idx];
        nn::layer_norm_backward(params.tensor(p + "ln1.g"), dh1.data(), bc.ln1, tmp.data(),
                                grads.tensor(p + "ln1.g"), grads.tensor(p + "ln1.b"), m, d);
        for (std::size_t idx = 0; idx < dx.size(); ++idx) dx[idx] += tmp[idx];
    }

    // x0 gradients: class token, embedding projection, positional tables
    double* dcls = grads.tensor("cls");
    for (int c = 0; c < d; ++c) dcls[c] += dx[c];
    nn::linear_backward(batch.features.data(), params.tensor("embed.w"), dx.data() + d,
                        nullptr, grads.tensor("embed.w"), grads.tensor("embed.b"), n,
                        batch.in_dim, d);
    double* dpt = grads.tensor("pos.temporal");
    double* dps = grads.tensor("pos.spatial");
    for (int t = 0; t < n; ++t) {
        auto [i, j] = batch.positions[t];
        const double* row = dx.data() + static_cast<std::size_t>(t + 1) * d;
        for (int c = 0; c < d; ++c) {
            dpt[static_cast<std::size_t>(i) * d + c] += row[c];
            dps[static_cast<std::size_t>(j) * d + c] += row[c];
        }
    }

    *grad_out = std::move(grads.flat());
    return loss;
}

// Central finite differences (step 1e-4) over a seeded 5% parameter sample;
// returns the max relative error. Intended for desk-scale models only
// (depth <= 2, width <= 16).
inline double grad_check(const ModelParams& params, const TokenBatch& batch, int target,
                         uint64_t seed = 0x5eedULL) {
    if (params.spec().depth > 2 || params.spec().width > 16)
        throw ConfigError("grad_check is capped at depth <= 2, width <= 16");
    std::vector<double> analytic;
    loss_and_grad(params, batch, target, &analytic);

    ModelParams probe = params;
    std::size_t total = probe.flat().size();
    std::size_t samples = std::max<std::size_t>(1, total / 20);
    SplitMix64 rng(seed);
    constexpr double step = 1e-4;

    double max_rel = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
        std::size_t idx = static_cast<std::size_t>(rng.next_below(total));
        double saved = probe.flat()[idx];
        probe.flat()[idx] = saved + step;
        double lp = loss_and_grad(probe, batch, target, nullptr);
        probe.flat()[idx] = saved - step;
        double lm = loss_and_grad(probe, batch, target, nullptr);
        probe.flat()[idx] = saved;
        double fd = (lp - lm) / (2.0 * step);
        double rel = std::abs(analytic[idx] - fd) /
                     std::max(std::abs(analytic[idx]) + std::abs(fd), 1e-6);
        max_rel = std::max(max_rel, rel);
    }
    return max_rel;
}

struct TrainStepResult {
    double loss = 0.0;
};

// One step of plain gradient descent on cross-entropy. Deterministic.
inline TrainStepResult train_step(ModelParams& params, const TokenBatch& batch, int target,
                                  double lr) {
    if (lr < 0.0) throw ConfigError("learning rate must be non-negative");
    std::vector<double> grads;
    double loss = loss_and_grad(params, batch, target, &grads);
    for (std::size_t idx = 0; idx < grads.size(); ++idx) params.flat()[idx] -= lr * grads[idx];
    return {loss};
}

}  // namespace mgtc
