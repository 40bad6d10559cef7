// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "lvgen/common.hpp"
#include "lvgen/nn.hpp"
#include "lvgen/rng.hpp"
#include "lvgen/signal.hpp"
#include "lvgen/tensor.hpp"

namespace lvgen {

struct ModelConfig {
    std::int64_t token_dim = 16;
    std::int64_t n_base_blocks = 4;
    std::int64_t n_control_blocks = 2;  // control covers the first blocks
    std::int64_t n_heads = 2;
    std::int64_t patch = 4;
    std::int64_t timesteps = 64;
    // Latent shape; pixel frames are 2x the latent spatial dims.
    std::int64_t lat_t = 49;
    std::int64_t lat_c = 1;
    std::int64_t lat_h = 8;
    std::int64_t lat_w = 8;
    // Multiplier on the 1/sqrt(fan-in) weight init. Values below 1 keep the
    // autoregressive anchor chain contractive on small frozen models.
    double init_gain = 1.0;

    std::int64_t mlp_hidden() const { return 2 * token_dim; }
    std::int64_t patches_per_frame() const { return (lat_h / patch) * (lat_w / patch); }
    std::int64_t n_tokens() const { return lat_t * patches_per_frame(); }
    std::int64_t patch_vec() const { return lat_c * patch * patch; }

    void validate() const {
        if (token_dim < 2 || token_dim % 2 != 0) throw ConfigError("ModelConfig: token_dim must be even and >= 2");
        if (n_heads < 1 || token_dim % n_heads != 0)
            throw ConfigError("ModelConfig: token_dim not divisible by n_heads");
        if (n_base_blocks < 1) throw ConfigError("ModelConfig: need at least one base block");
        if (n_control_blocks < 1 || n_control_blocks > n_base_blocks)
            throw ConfigError("ModelConfig: n_control_blocks out of range");
        if (timesteps < 1) throw ConfigError("ModelConfig: timesteps must be >= 1");
        if (lat_t < 1 || lat_c < 1 || lat_h < 1 || lat_w < 1) throw ConfigError("ModelConfig: bad latent shape");
        if (patch < 1 || lat_h % patch != 0 || lat_w % patch != 0)
            throw ConfigError("ModelConfig: patch must divide latent H and W");
        if (!(init_gain > 0.0)) throw ConfigError("ModelConfig: init_gain must be > 0");
    }
};

// Linear-beta noising schedule; alpha_bar decreasing from near 1.
struct DiffusionSchedule {
    std::vector<double> betas;
    std::vector<double> alphas;
    std::vector<double> alpha_bars;

    static DiffusionSchedule linear(std::int64_t timesteps, double beta_start = 1e-3, double beta_end = 0.2) {
        DiffusionSchedule s;
        s.betas.resize(static_cast<std::size_t>(timesteps));
        s.alphas.resize(static_cast<std::size_t>(timesteps));
        s.alpha_bars.resize(static_cast<std::size_t>(timesteps));
        double prod = 1.0;
        for (std::int64_t t = 0; t < timesteps; ++t) {
            const double b = timesteps == 1
                                 ? beta_start
                                 : beta_start + (beta_end - beta_start) * static_cast<double>(t) /
                                       static_cast<double>(timesteps - 1);
            s.betas[static_cast<std::size_t>(t)] = b;
            s.alphas[static_cast<std::size_t>(t)] = 1.0 - b;
            prod *= 1.0 - b;
            s.alpha_bars[static_cast<std::size_t>(t)] = prod;
        }
        return s;
    }
};

// ---- interleaved half-copy primitives ----

// Split a [out x in] weight by input-column parity: even columns and odd
// columns, each [out x in/2].
inline std::pair<Param, Param> split_columns_parity(const Param& w) {
    const std::int64_t out = w.shape[0], in = w.shape[1];
    if (in % 2 != 0) throw ConfigError("split_columns_parity: odd input width");
    Param even, odd;
    even.resize({out, in / 2});
    odd.resize({out, in / 2});
    for (std::int64_t o = 0; o < out; ++o)
        for (std::int64_t j = 0; j < in / 2; ++j) {
            even.w[static_cast<std::size_t>(o * (in / 2) + j)] = w.w[static_cast<std::size_t>(o * in + 2 * j)];
            odd.w[static_cast<std::size_t>(o * (in / 2) + j)] = w.w[static_cast<std::size_t>(o * in + 2 * j + 1)];
        }
    return {even, odd};
}

// Split a [out x in] weight by output-row parity, each [out/2 x in].
inline std::pair<Param, Param> split_rows_parity(const Param& w) {
    const std::int64_t out = w.shape[0];
    const std::int64_t in = w.shape.size() > 1 ? w.shape[1] : 1;
    if (out % 2 != 0) throw ConfigError("split_rows_parity: odd output width");
    Param even, odd;
    if (w.shape.size() > 1) {
        even.resize({out / 2, in});
        odd.resize({out / 2, in});
    } else {
        even.resize({out / 2});
        odd.resize({out / 2});
    }
    for (std::int64_t r = 0; r < out / 2; ++r)
        for (std::int64_t j = 0; j < in; ++j) {
            even.w[static_cast<std::size_t>(r * in + j)] = w.w[static_cast<std::size_t>((2 * r) * in + j)];
            odd.w[static_cast<std::size_t>(r * in + j)] = w.w[static_cast<std::size_t>((2 * r + 1) * in + j)];
        }
    return {even, odd};
}

inline Param interleave_columns(const Param& even, const Param& odd) {
    const std::int64_t out = even.shape[0], half = even.shape[1];
    Param w;
    w.resize({out, 2 * half});
    for (std::int64_t o = 0; o < out; ++o)
        for (std::int64_t j = 0; j < half; ++j) {
            w.w[static_cast<std::size_t>(o * 2 * half + 2 * j)] = even.w[static_cast<std::size_t>(o * half + j)];
            w.w[static_cast<std::size_t>(o * 2 * half + 2 * j + 1)] = odd.w[static_cast<std::size_t>(o * half + j)];
        }
    return w;
}

inline Param interleave_rows(const Param& even, const Param& odd) {
    const std::int64_t half = even.shape[0];
    const std::int64_t in = even.shape.size() > 1 ? even.shape[1] : 1;
    Param w;
    if (even.shape.size() > 1)
        w.resize({2 * half, in});
    else
        w.resize({2 * half});
    for (std::int64_t r = 0; r < half; ++r)
        for (std::int64_t j = 0; j < in; ++j) {
            w.w[static_cast<std::size_t>((2 * r) * in + j)] = even.w[static_cast<std::size_t>(r * in + j)];
            w.w[static_cast<std::size_t>((2 * r + 1) * in + j)] = odd.w[static_cast<std::size_t>(r * in + j)];
        }
    return w;
}

// The controlled diffusion transformer: frozen base blocks, trainable
// half-width dense/sparse branches, zero-initialized per-block fusion.
struct ControlDiT {
    ModelConfig config;
    DiffusionSchedule schedule;

    Linear latent_embed;       // frozen
    Linear time_embed;         // frozen
    Linear first_frame_embed;  // frozen, anchor conditioning
    Linear out_proj;           // frozen
    Linear dense_embed;        // trainable control tokenizer (half width)
    Linear sparse_embed;       // trainable control tokenizer (half width)
    std::vector<TransformerBlock> base_blocks;    // frozen
    std::vector<TransformerBlock> dense_branch;   // trainable
    std::vector<TransformerBlock> sparse_branch;  // trainable
    std::vector<Linear> fusion;                   // trainable, zero at init

    static constexpr std::int64_t kTimeFeatures = 16;

    void visit_trainable(const ParamVisitor& fn) {
        dense_embed.visit("dense_embed", fn);
        sparse_embed.visit("sparse_embed", fn);
        for (std::size_t l = 0; l < dense_branch.size(); ++l)
            dense_branch[l].visit("dense_branch." + std::to_string(l), fn);
        for (std::size_t l = 0; l < sparse_branch.size(); ++l)
            sparse_branch[l].visit("sparse_branch." + std::to_string(l), fn);
        for (std::size_t l = 0; l < fusion.size(); ++l) fusion[l].visit("fusion." + std::to_string(l), fn);
    }

    void visit_frozen(const ParamVisitor& fn) {
        latent_embed.visit("latent_embed", fn);
        time_embed.visit("time_embed", fn);
        first_frame_embed.visit("first_frame_embed", fn);
        out_proj.visit("out_proj", fn);
        for (std::size_t l = 0; l < base_blocks.size(); ++l)
            base_blocks[l].visit("base_blocks." + std::to_string(l), fn);
    }

    void visit_all(const ParamVisitor& fn) {
        visit_frozen(fn);
        visit_trainable(fn);
    }

    std::vector<Param*> trainable_params() {
        std::vector<Param*> out;
        visit_trainable([&](const std::string&, Param& p) { out.push_back(&p); });
        return out;
    }

    void zero_grads() {
        visit_all([](const std::string&, Param& p) { p.zero_grad(); });
    }
};

namespace detail {

// Copy the even/odd interleaved half of every base-block weight into a
// half-width branch block. First-layer matrices split by columns, the
// matrices consuming an internal width by rows; biases follow their rows.
inline TransformerBlock make_branch_block(const TransformerBlock& base, const ModelConfig& cfg, bool odd) {
    const std::int64_t half = cfg.token_dim / 2;
    TransformerBlock br;
    br.attn.in_dim = half;
    br.attn.model_dim = cfg.token_dim;
    br.attn.out_dim = half;
    br.attn.n_heads = cfg.n_heads;
    auto pick = [odd](std::pair<Param, Param> pair) { return odd ? pair.second : pair.first; };

    auto set_linear = [](Linear& lin, Param w, Param b) {
        lin.out_dim = w.shape[0];
        lin.in_dim = w.shape[1];
        lin.W = std::move(w);
        lin.b = std::move(b);
    };
    set_linear(br.attn.wq, pick(split_columns_parity(base.attn.wq.W)), base.attn.wq.b);
    set_linear(br.attn.wk, pick(split_columns_parity(base.attn.wk.W)), base.attn.wk.b);
    set_linear(br.attn.wv, pick(split_columns_parity(base.attn.wv.W)), base.attn.wv.b);
    set_linear(br.attn.wo, pick(split_rows_parity(base.attn.wo.W)), pick(split_rows_parity(base.attn.wo.b)));
    br.mlp.hidden = base.mlp.hidden;
    set_linear(br.mlp.fc1, pick(split_columns_parity(base.mlp.fc1.W)), base.mlp.fc1.b);
    set_linear(br.mlp.fc2, pick(split_rows_parity(base.mlp.fc2.W)), pick(split_rows_parity(base.mlp.fc2.b)));
    return br;
}

}  // namespace detail

inline std::pair<std::vector<TransformerBlock>, std::vector<TransformerBlock>> init_control_branches(
    const std::vector<TransformerBlock>& base_blocks, const ModelConfig& config) {
    config.validate();
    std::vector<TransformerBlock> dense, sparse;
    for (std::int64_t l = 0; l < config.n_control_blocks; ++l) {
        dense.push_back(detail::make_branch_block(base_blocks[static_cast<std::size_t>(l)], config, false));
        sparse.push_back(detail::make_branch_block(base_blocks[static_cast<std::size_t>(l)], config, true));
    }
    return {std::move(dense), std::move(sparse)};
}

inline ControlDiT init_model(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    ControlDiT m;
    m.config = config;
    m.schedule = DiffusionSchedule::linear(config.timesteps);
    Rng rng(stream_key(seed, 0x6D6F64656C000000ULL, 0));
    const double gain = config.init_gain;
    m.latent_embed.init(config.patch_vec(), config.token_dim, &rng, gain);
    m.time_embed.init(ControlDiT::kTimeFeatures, config.token_dim, &rng, gain);
    m.first_frame_embed.init(config.patch_vec(), config.token_dim, &rng, gain);
    m.out_proj.init(config.token_dim, config.patch_vec(), &rng, gain);
    const std::int64_t ctrl_patch_vec = config.patch * config.patch;  // control signals are single-channel
    m.dense_embed.init(ctrl_patch_vec, config.token_dim / 2, &rng, gain);
    m.sparse_embed.init(ctrl_patch_vec, config.token_dim / 2, &rng, gain);
    m.base_blocks.resize(static_cast<std::size_t>(config.n_base_blocks));
    for (auto& blk : m.base_blocks)
        blk.init(config.token_dim, config.token_dim, config.mlp_hidden(), config.n_heads, &rng, gain);
    auto branches = init_control_branches(m.base_blocks, config);
    m.dense_branch = std::move(branches.first);
    m.sparse_branch = std::move(branches.second);
    m.fusion.resize(static_cast<std::size_t>(config.n_control_blocks));
    for (auto& f : m.fusion) f.init(config.token_dim / 2, config.token_dim, nullptr);  // exactly zero
    return m;
}

// ---- tokenization helpers ----

inline Mat patchify(const VideoTensor& v, std::int64_t patch) {
    if (v.h % patch != 0 || v.w % patch != 0) throw InvalidInput("patchify: patch must divide H and W");
    const std::int64_t ph = v.h / patch, pw = v.w / patch;
    Mat out(v.t * ph * pw, v.c * patch * patch);
    std::int64_t row = 0;
    for (std::int64_t t = 0; t < v.t; ++t)
        for (std::int64_t py = 0; py < ph; ++py)
            for (std::int64_t px = 0; px < pw; ++px, ++row) {
                std::int64_t col = 0;
                for (std::int64_t c = 0; c < v.c; ++c)
                    for (std::int64_t y = 0; y < patch; ++y)
                        for (std::int64_t x = 0; x < patch; ++x, ++col)
                            out.at(row, col) = v.at(t, c, py * patch + y, px * patch + x);
            }
    return out;
}

inline VideoTensor unpatchify(const Mat& m, std::int64_t t, std::int64_t c, std::int64_t h, std::int64_t w,
                              std::int64_t patch) {
    VideoTensor out(t, c, h, w);
    const std::int64_t ph = h / patch, pw = w / patch;
    std::int64_t row = 0;
    for (std::int64_t ti = 0; ti < t; ++ti)
        for (std::int64_t py = 0; py < ph; ++py)
            for (std::int64_t px = 0; px < pw; ++px, ++row) {
                std::int64_t col = 0;
                for (std::int64_t ci = 0; ci < c; ++ci)
                    for (std::int64_t y = 0; y < patch; ++y)
                        for (std::int64_t x = 0; x < patch; ++x, ++col)
                            out.at(ti, ci, py * patch + y, px * patch + x) = m.at(row, col);
            }
    return out;
}

// Identity-style codec: encode = 2x average pooling, decode = 2x nearest.
inline VideoTensor encode_latent(const VideoTensor& pixels) {
    if (pixels.h % 2 != 0 || pixels.w % 2 != 0) throw InvalidInput("encode_latent: H and W must be even");
    VideoTensor out(pixels.t, pixels.c, pixels.h / 2, pixels.w / 2);
    for (std::int64_t t = 0; t < pixels.t; ++t)
        for (std::int64_t c = 0; c < pixels.c; ++c)
            for (std::int64_t y = 0; y < out.h; ++y)
                for (std::int64_t x = 0; x < out.w; ++x)
                    out.at(t, c, y, x) = (pixels.at(t, c, 2 * y, 2 * x) + pixels.at(t, c, 2 * y, 2 * x + 1) +
                                          pixels.at(t, c, 2 * y + 1, 2 * x) + pixels.at(t, c, 2 * y + 1, 2 * x + 1)) /
                                         4.0;
    return out;
}

inline VideoTensor decode_latent(const VideoTensor& latent) {
    VideoTensor out(latent.t, latent.c, latent.h * 2, latent.w * 2);
    for (std::int64_t t = 0; t < latent.t; ++t)
        for (std::int64_t c = 0; c < latent.c; ++c)
            for (std::int64_t y = 0; y < out.h; ++y)
                for (std::int64_t x = 0; x < out.w; ++x) out.at(t, c, y, x) = latent.at(t, c, y / 2, x / 2);
    return out;
}

inline std::vector<double> time_features(std::int64_t t) {
    std::vector<double> f(static_cast<std::size_t>(ControlDiT::kTimeFeatures), 0.0);
    for (std::int64_t k = 0; k < ControlDiT::kTimeFeatures / 2; ++k) {
        const double freq = std::pow(10000.0, -static_cast<double>(k) / (ControlDiT::kTimeFeatures / 2.0));
        f[static_cast<std::size_t>(2 * k)] = std::sin(static_cast<double>(t) * freq);
        f[static_cast<std::size_t>(2 * k + 1)] = std::cos(static_cast<double>(t) * freq);
    }
    return f;
}

// ---- forward / backward ----

struct ForwardCache {
    Mat lat_patches, anchor_patches, dense_patches, sparse_patches;
    Mat time_feat;
    std::vector<BlockCache> base_caches, dense_caches, sparse_caches;
    std::vector<Mat> fusion_inputs;
    Mat z_final;
    double fusion_scale = 1.0;
    bool used_control = false;
};

namespace detail {

inline void check_forward_inputs(const ControlDiT& model, const VideoTensor& x_t, std::int64_t t,
                                 const ControlPair* control, const VideoTensor& anchor) {
    const ModelConfig& c = model.config;
    if (x_t.t != c.lat_t || x_t.c != c.lat_c || x_t.h != c.lat_h || x_t.w != c.lat_w)
        throw InvalidInput("forward: latent shape mismatch");
    if (t < 0 || t >= c.timesteps) throw InvalidInput("forward: timestep out of range");
    if (anchor.t != 1 || anchor.c != c.lat_c || anchor.h != c.lat_h || anchor.w != c.lat_w)
        throw InvalidInput("forward: anchor frame shape mismatch");
    if (control) {
        control->validate();
        if (control->dense.t != c.lat_t || control->dense.c != 1 || control->dense.h != 2 * c.lat_h ||
            control->dense.w != 2 * c.lat_w)
            throw InvalidInput("forward: control dims inconsistent with latent shape");
    }
}

inline VideoTensor forward_impl(const ControlDiT& model, const VideoTensor& x_t, std::int64_t t,
                                const ControlPair* control, const VideoTensor& anchor, double fusion_scale,
                                ForwardCache* cache) {
    check_forward_inputs(model, x_t, t, control, anchor);
    if (control && (fusion_scale <= 0.0 || fusion_scale > 1.0))
        throw InvalidInput("forward: fusion_scale must be in (0, 1]");
    const ModelConfig& cfg = model.config;

    Mat lat_patches = patchify(x_t, cfg.patch);
    Mat z = model.latent_embed.forward(lat_patches);

    Mat tf(1, ControlDiT::kTimeFeatures);
    tf.v = time_features(t);
    const Mat temb = model.time_embed.forward(tf);
    for (std::int64_t i = 0; i < z.rows; ++i)
        for (std::int64_t j = 0; j < z.cols; ++j) z.at(i, j) += temb.at(0, j);

    Mat anchor_patches = patchify(anchor, cfg.patch);
    const Mat aemb = model.first_frame_embed.forward(anchor_patches);
    for (std::int64_t i = 0; i < cfg.patches_per_frame(); ++i)
        for (std::int64_t j = 0; j < z.cols; ++j) z.at(i, j) += aemb.at(i, j);

    Mat cd, cp, dense_patches, sparse_patches;
    if (control) {
        dense_patches = patchify(encode_latent(control->dense), cfg.patch);
        sparse_patches = patchify(encode_latent(control->sparse), cfg.patch);
        cd = model.dense_embed.forward(dense_patches);
        cp = model.sparse_embed.forward(sparse_patches);
    }

    if (cache) {
        cache->lat_patches = std::move(lat_patches);
        cache->anchor_patches = std::move(anchor_patches);
        cache->dense_patches = std::move(dense_patches);
        cache->sparse_patches = std::move(sparse_patches);
        cache->time_feat = tf;
        cache->base_caches.resize(model.base_blocks.size());
        cache->dense_caches.resize(static_cast<std::size_t>(control ? cfg.n_control_blocks : 0));
        cache->sparse_caches.resize(static_cast<std::size_t>(control ? cfg.n_control_blocks : 0));
        cache->fusion_inputs.resize(static_cast<std::size_t>(control ? cfg.n_control_blocks : 0));
        cache->fusion_scale = fusion_scale;
        cache->used_control = control != nullptr;
    }

    for (std::int64_t l = 0; l < cfg.n_base_blocks; ++l) {
        const auto li = static_cast<std::size_t>(l);
        Mat zb = model.base_blocks[li].forward(z, cache ? &cache->base_caches[li] : nullptr);
        if (control && l < cfg.n_control_blocks) {
            Mat d = model.dense_branch[li].forward(cd, cache ? &cache->dense_caches[li] : nullptr);
            Mat s = model.sparse_branch[li].forward(cp, cache ? &cache->sparse_caches[li] : nullptr);
            Mat fin = s;
            for (std::size_t i = 0; i < fin.v.size(); ++i) fin.v[i] += fusion_scale * d.v[i];
            const Mat inj = model.fusion[li].forward(fin);
            for (std::size_t i = 0; i < zb.v.size(); ++i) zb.v[i] += inj.v[i];
            if (cache) cache->fusion_inputs[li] = std::move(fin);
            cd = std::move(d);
            cp = std::move(s);
        }
        z = std::move(zb);
    }

    if (cache) cache->z_final = z;
    const Mat out = model.out_proj.forward(z);
    return unpatchify(out, cfg.lat_t, cfg.lat_c, cfg.lat_h, cfg.lat_w, cfg.patch);
}

}  // namespace detail

inline VideoTensor controlled_forward(const ControlDiT& model, const VideoTensor& x_t, std::int64_t t,
                                      const ControlPair& control, const VideoTensor& anchor_frame,
                                      double fusion_scale = 1.0) {
    return detail::forward_impl(model, x_t, t, &control, anchor_frame, fusion_scale, nullptr);
}

// Forward pass with both control branches removed.
inline VideoTensor base_forward(const ControlDiT& model, const VideoTensor& x_t, std::int64_t t,
                                const VideoTensor& anchor_frame) {
    return detail::forward_impl(model, x_t, t, nullptr, anchor_frame, 1.0, nullptr);
}

inline VideoTensor add_noise(const VideoTensor& x0, std::int64_t t, const VideoTensor& eps,
                             const DiffusionSchedule& schedule) {
    require_same_shape(x0, eps, "add_noise");
    if (t < 0 || t >= static_cast<std::int64_t>(schedule.alpha_bars.size()))
        throw InvalidInput("add_noise: t out of range");
    const double ab = schedule.alpha_bars[static_cast<std::size_t>(t)];
    const double sa = std::sqrt(ab);
    const double sb = std::sqrt(1.0 - ab);
    VideoTensor out = x0;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = sa * x0.data[i] + sb * eps.data[i];
    return out;
}

inline double diffusion_loss(const ControlDiT& model, const VideoTensor& x0, const ControlPair& control,
                             const VideoTensor& anchor, std::int64_t t, const VideoTensor& eps,
                             double fusion_scale = 1.0) {
    const VideoTensor x_t = add_noise(x0, t, eps, model.schedule);
    const VideoTensor pred = controlled_forward(model, x_t, t, control, anchor, fusion_scale);
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const double d = eps.data[i] - pred.data[i];
        acc += d * d;
    }
    return acc / static_cast<double>(pred.data.size());
}

// Loss plus gradient accumulation into every trainable (and frozen) param's
// grad buffer; only trainables are ever stepped.
inline double diffusion_loss_backward(ControlDiT& model, const VideoTensor& x0, const ControlPair& control,
                                      const VideoTensor& anchor, std::int64_t t, const VideoTensor& eps,
                                      double fusion_scale = 1.0) {
    const ModelConfig& cfg = model.config;
    const VideoTensor x_t = add_noise(x0, t, eps, model.schedule);
    ForwardCache cache;
    const VideoTensor pred = detail::forward_impl(model, x_t, t, &control, anchor, fusion_scale, &cache);

    const auto n = static_cast<double>(pred.data.size());
    double loss = 0.0;
    VideoTensor dpred = pred;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const double d = pred.data[i] - eps.data[i];
        loss += d * d;
        dpred.data[i] = 2.0 * d / n;
    }
    loss /= n;

    const Mat dout = patchify(dpred, cfg.patch);
    Mat dz = model.out_proj.backward(cache.z_final, dout);

    const std::int64_t half = cfg.token_dim / 2;
    Mat dcd_next(cache.dense_patches.rows, half);
    Mat dcp_next(cache.sparse_patches.rows, half);
    for (std::int64_t l = cfg.n_base_blocks - 1; l >= 0; --l) {
        const auto li = static_cast<std::size_t>(l);
        if (l < cfg.n_control_blocks) {
            const Mat dfin = model.fusion[li].backward(cache.fusion_inputs[li], dz);
            Mat dd = dcd_next;
            Mat ds = dcp_next;
            for (std::size_t i = 0; i < dd.v.size(); ++i) {
                dd.v[i] += fusion_scale * dfin.v[i];
                ds.v[i] += dfin.v[i];
            }
            dz = model.base_blocks[li].backward(cache.base_caches[li], dz);
            dcd_next = model.dense_branch[li].backward(cache.dense_caches[li], dd);
            dcp_next = model.sparse_branch[li].backward(cache.sparse_caches[li], ds);
        } else {
            dz = model.base_blocks[li].backward(cache.base_caches[li], dz);
        }
    }
    model.dense_embed.backward(cache.dense_patches, dcd_next);
    model.sparse_embed.backward(cache.sparse_patches, dcp_next);
    return loss;
}

// One AdamW update on the trainable groups; gradients are cleared after.
inline void backward_and_step(ControlDiT& model, AdamW& opt, double learning_rate) {
    auto params = model.trainable_params();
    opt.step(params, learning_rate);
    model.zero_grads();
}

// Deterministic (variance-zero) ancestral denoising from t = T-1 down to 0.
inline VideoTensor sample_clip(const ControlDiT& model, const VideoTensor& noise, const ControlPair& control,
                               const VideoTensor& anchor_frame, double fusion_scale = 1.0) {
    const ModelConfig& cfg = model.config;
    if (noise.t != cfg.lat_t || noise.c != cfg.lat_c || noise.h != cfg.lat_h || noise.w != cfg.lat_w)
        throw InvalidInput("sample_clip: noise shape mismatch");
    VideoTensor x = noise;
    for (std::int64_t t = cfg.timesteps - 1; t >= 0; --t) {
        const VideoTensor pred = controlled_forward(model, x, t, control, anchor_frame, fusion_scale);
        const double beta = model.schedule.betas[static_cast<std::size_t>(t)];
        const double alpha = model.schedule.alphas[static_cast<std::size_t>(t)];
        const double ab = model.schedule.alpha_bars[static_cast<std::size_t>(t)];
        const double coef = beta / std::sqrt(1.0 - ab);
        const double inv_sqrt_alpha = 1.0 / std::sqrt(alpha);
        for (std::size_t i = 0; i < x.data.size(); ++i)
            x.data[i] = inv_sqrt_alpha * (x.data[i] - coef * pred.data[i]);
    }
    return x;
}

}  // namespace lvgen
