// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lvgen/common.hpp"
#include "lvgen/rng.hpp"

namespace lvgen {

// Row-major [rows x cols] matrix of doubles.
struct Mat {
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::vector<double> v;

    Mat() = default;
    Mat(std::int64_t r, std::int64_t c) : rows(r), cols(c), v(static_cast<std::size_t>(r * c), 0.0) {}

    double& at(std::int64_t i, std::int64_t j) { return v[static_cast<std::size_t>(i * cols + j)]; }
    double at(std::int64_t i, std::int64_t j) const { return v[static_cast<std::size_t>(i * cols + j)]; }
};

inline Mat operator+(const Mat& a, const Mat& b) {
    Mat out = a;
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] += b.v[i];
    return out;
}

// Weight tensor with its gradient accumulator.
struct Param {
    std::vector<std::int64_t> shape;
    std::vector<double> w;
    std::vector<double> g;

    void resize(std::vector<std::int64_t> s) {
        shape = std::move(s);
        std::int64_t n = 1;
        for (std::int64_t d : shape) n *= d;
        w.assign(static_cast<std::size_t>(n), 0.0);
        g.assign(static_cast<std::size_t>(n), 0.0);
    }
    std::size_t size() const { return w.size(); }
    void zero_grad() { std::fill(g.begin(), g.end(), 0.0); }
};

using ParamVisitor = std::function<void(const std::string& name, Param& p)>;

// y = x W^T + b, with W stored [out x in].
struct Linear {
    std::int64_t in_dim = 0;
    std::int64_t out_dim = 0;
    Param W;
    Param b;

    void init(std::int64_t in, std::int64_t out, Rng* rng, double gain = 1.0) {
        in_dim = in;
        out_dim = out;
        W.resize({out, in});
        b.resize({out});
        if (rng) {
            const double scale = gain / std::sqrt(static_cast<double>(in));
            for (double& x : W.w) x = rng->normal() * scale;
        }
    }

    Mat forward(const Mat& x) const {
        Mat y(x.rows, out_dim);
        for (std::int64_t i = 0; i < x.rows; ++i)
            for (std::int64_t o = 0; o < out_dim; ++o) {
                double acc = b.w[static_cast<std::size_t>(o)];
                const double* wr = &W.w[static_cast<std::size_t>(o * in_dim)];
                const double* xr = &x.v[static_cast<std::size_t>(i * in_dim)];
                for (std::int64_t j = 0; j < in_dim; ++j) acc += xr[j] * wr[j];
                y.at(i, o) = acc;
            }
        return y;
    }

    // Accumulates weight grads; returns grad w.r.t. the input.
    Mat backward(const Mat& x, const Mat& dy) {
        Mat dx(x.rows, in_dim);
        for (std::int64_t i = 0; i < x.rows; ++i) {
            const double* dyr = &dy.v[static_cast<std::size_t>(i * out_dim)];
            const double* xr = &x.v[static_cast<std::size_t>(i * in_dim)];
            double* dxr = &dx.v[static_cast<std::size_t>(i * in_dim)];
            for (std::int64_t o = 0; o < out_dim; ++o) {
                const double d = dyr[o];
                b.g[static_cast<std::size_t>(o)] += d;
                double* gw = &W.g[static_cast<std::size_t>(o * in_dim)];
                const double* wr = &W.w[static_cast<std::size_t>(o * in_dim)];
                for (std::int64_t j = 0; j < in_dim; ++j) {
                    gw[j] += d * xr[j];
                    dxr[j] += d * wr[j];
                }
            }
        }
        return dx;
    }

    void visit(const std::string& prefix, const ParamVisitor& fn) {
        fn(prefix + ".w", W);
        fn(prefix + ".b", b);
    }
};

inline double silu(double x) {
    const double s = 1.0 / (1.0 + std::exp(-x));
    return x * s;
}

inline double silu_grad(double x) {
    const double s = 1.0 / (1.0 + std::exp(-x));
    return s * (1.0 + x * (1.0 - s));
}

struct AttnCache {
    Mat x, q, k, v, ctx;
    std::vector<double> probs;  // [heads, n, n]
};

// Multi-head self-attention; in/out widths may differ from the inner model
// width (the control branches run half-width streams through full-width
// attention inner projections).
struct MultiHeadAttention {
    std::int64_t in_dim = 0, model_dim = 0, out_dim = 0, n_heads = 1;
    Linear wq, wk, wv, wo;

    void init(std::int64_t in, std::int64_t model, std::int64_t out, std::int64_t heads, Rng* rng,
              double gain = 1.0) {
        if (model % heads != 0) throw ConfigError("attention: model_dim not divisible by n_heads");
        in_dim = in;
        model_dim = model;
        out_dim = out;
        n_heads = heads;
        wq.init(in, model, rng, gain);
        wk.init(in, model, rng, gain);
        wv.init(in, model, rng, gain);
        wo.init(model, out, rng, gain);
    }

    Mat forward(const Mat& x, AttnCache* cache) const {
        const std::int64_t n = x.rows;
        const std::int64_t dh = model_dim / n_heads;
        const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
        Mat q = wq.forward(x), k = wk.forward(x), v = wv.forward(x);
        Mat ctx(n, model_dim);
        std::vector<double> probs(static_cast<std::size_t>(n_heads * n * n), 0.0);
        std::vector<double> row(static_cast<std::size_t>(n), 0.0);
        for (std::int64_t h = 0; h < n_heads; ++h) {
            const std::int64_t off = h * dh;
            double* ph = &probs[static_cast<std::size_t>(h * n * n)];
            for (std::int64_t i = 0; i < n; ++i) {
                double mx = -1e300;
                for (std::int64_t j = 0; j < n; ++j) {
                    double s = 0.0;
                    for (std::int64_t d = 0; d < dh; ++d) s += q.at(i, off + d) * k.at(j, off + d);
                    s *= scale;
                    row[static_cast<std::size_t>(j)] = s;
                    if (s > mx) mx = s;
                }
                double denom = 0.0;
                for (std::int64_t j = 0; j < n; ++j) {
                    const double e = std::exp(row[static_cast<std::size_t>(j)] - mx);
                    ph[i * n + j] = e;
                    denom += e;
                }
                for (std::int64_t j = 0; j < n; ++j) ph[i * n + j] /= denom;
                for (std::int64_t d = 0; d < dh; ++d) {
                    double acc = 0.0;
                    for (std::int64_t j = 0; j < n; ++j) acc += ph[i * n + j] * v.at(j, off + d);
                    ctx.at(i, off + d) = acc;
                }
            }
        }
        Mat y = wo.forward(ctx);
        if (cache) {
            cache->x = x;
            cache->q = std::move(q);
            cache->k = std::move(k);
            cache->v = std::move(v);
            cache->ctx = std::move(ctx);
            cache->probs = std::move(probs);
        }
        return y;
    }

    Mat backward(const AttnCache& cache, const Mat& dy) {
        const std::int64_t n = cache.x.rows;
        const std::int64_t dh = model_dim / n_heads;
        const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
        Mat dctx = wo.backward(cache.ctx, dy);
        Mat dq(n, model_dim), dk(n, model_dim), dv(n, model_dim);
        std::vector<double> dp(static_cast<std::size_t>(n), 0.0);
        for (std::int64_t h = 0; h < n_heads; ++h) {
            const std::int64_t off = h * dh;
            const double* ph = &cache.probs[static_cast<std::size_t>(h * n * n)];
            for (std::int64_t i = 0; i < n; ++i) {
                double dot = 0.0;
                for (std::int64_t j = 0; j < n; ++j) {
                    double acc = 0.0;
                    for (std::int64_t d = 0; d < dh; ++d) acc += dctx.at(i, off + d) * cache.v.at(j, off + d);
                    dp[static_cast<std::size_t>(j)] = acc;
                    dot += acc * ph[i * n + j];
                }
                for (std::int64_t j = 0; j < n; ++j) {
                    const double ds = ph[i * n + j] * (dp[static_cast<std::size_t>(j)] - dot) * scale;
                    for (std::int64_t d = 0; d < dh; ++d) {
                        dq.at(i, off + d) += ds * cache.k.at(j, off + d);
                        dk.at(j, off + d) += ds * cache.q.at(i, off + d);
                    }
                }
                for (std::int64_t j = 0; j < n; ++j) {
                    const double p = ph[i * n + j];
                    for (std::int64_t d = 0; d < dh; ++d) dv.at(j, off + d) += p * dctx.at(i, off + d);
                }
            }
        }
        Mat dx = wq.backward(cache.x, dq);
        const Mat dxk = wk.backward(cache.x, dk);
        const Mat dxv = wv.backward(cache.x, dv);
        for (std::size_t i = 0; i < dx.v.size(); ++i) dx.v[i] += dxk.v[i] + dxv.v[i];
        return dx;
    }

    void visit(const std::string& prefix, const ParamVisitor& fn) {
        wq.visit(prefix + ".wq", fn);
        wk.visit(prefix + ".wk", fn);
        wv.visit(prefix + ".wv", fn);
        wo.visit(prefix + ".wo", fn);
    }
};

struct MlpCache {
    Mat x, h_pre, h_act;
};

struct Mlp {
    std::int64_t hidden = 0;
    Linear fc1, fc2;

    void init(std::int64_t in, std::int64_t hid, std::int64_t out, Rng* rng, double gain = 1.0) {
        hidden = hid;
        fc1.init(in, hid, rng, gain);
        fc2.init(hid, out, rng, gain);
    }

    Mat forward(const Mat& x, MlpCache* cache) const {
        Mat h = fc1.forward(x);
        Mat a = h;
        for (double& v : a.v) v = silu(v);
        Mat y = fc2.forward(a);
        if (cache) {
            cache->x = x;
            cache->h_pre = std::move(h);
            cache->h_act = std::move(a);
        }
        return y;
    }

    Mat backward(const MlpCache& cache, const Mat& dy) {
        Mat da = fc2.backward(cache.h_act, dy);
        for (std::size_t i = 0; i < da.v.size(); ++i) da.v[i] *= silu_grad(cache.h_pre.v[i]);
        return fc1.backward(cache.x, da);
    }

    void visit(const std::string& prefix, const ParamVisitor& fn) {
        fc1.visit(prefix + ".fc1", fn);
        fc2.visit(prefix + ".fc2", fn);
    }
};

struct BlockCache {
    AttnCache attn;
    MlpCache mlp;
    Mat x1;
};

// Residual transformer block: x + attn(x), then + mlp(.). in/out width may
// be half the inner width for control-branch blocks.
struct TransformerBlock {
    MultiHeadAttention attn;
    Mlp mlp;

    void init(std::int64_t io_dim, std::int64_t model_dim, std::int64_t hidden, std::int64_t heads, Rng* rng,
              double gain = 1.0) {
        attn.init(io_dim, model_dim, io_dim, heads, rng, gain);
        mlp.init(io_dim, hidden, io_dim, rng, gain);
    }

    Mat forward(const Mat& x, BlockCache* cache) const {
        Mat a = attn.forward(x, cache ? &cache->attn : nullptr);
        Mat x1 = x + a;
        Mat m = mlp.forward(x1, cache ? &cache->mlp : nullptr);
        Mat y = x1 + m;
        if (cache) cache->x1 = std::move(x1);
        return y;
    }

    Mat backward(const BlockCache& cache, const Mat& dy) {
        Mat dx1 = mlp.backward(cache.mlp, dy);
        for (std::size_t i = 0; i < dx1.v.size(); ++i) dx1.v[i] += dy.v[i];
        Mat dx = attn.backward(cache.attn, dx1);
        for (std::size_t i = 0; i < dx.v.size(); ++i) dx.v[i] += dx1.v[i];
        return dx;
    }

    void visit(const std::string& prefix, const ParamVisitor& fn) {
        attn.visit(prefix + ".attn", fn);
        mlp.visit(prefix + ".mlp", fn);
    }
};

// Adam with decoupled weight decay, one state slot per registered param.
struct AdamW {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-4;
    std::int64_t step_count = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;

    void attach(const std::vector<Param*>& params) {
        m_.clear();
        v_.clear();
        for (const Param* p : params) {
            m_.emplace_back(p->size(), 0.0);
            v_.emplace_back(p->size(), 0.0);
        }
        step_count = 0;
    }

    void step(const std::vector<Param*>& params, double lr) {
        if (params.size() != m_.size()) throw ConfigError("AdamW: param set changed after attach");
        ++step_count;
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
        for (std::size_t pi = 0; pi < params.size(); ++pi) {
            Param& p = *params[pi];
            auto& m = m_[pi];
            auto& v = v_[pi];
            for (std::size_t i = 0; i < p.size(); ++i) {
                const double g = p.g[i];
                m[i] = beta1 * m[i] + (1.0 - beta1) * g;
                v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
                const double mhat = m[i] / bc1;
                const double vhat = v[i] / bc2;
                p.w[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + weight_decay * p.w[i]);
            }
        }
    }
};

}  // namespace lvgen
