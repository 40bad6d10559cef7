// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "lvgen/common.hpp"
#include "lvgen/rng.hpp"
#include "lvgen/tensor.hpp"

namespace lvgen {

struct DegradeConfig {
    double feature_prob = 0.15;
    double data_prob = 0.10;
    double scale_lo = 0.05;
    double scale_hi = 1.0;
    std::int64_t n_scales = 5;  // scale set {1, 1/2, ..., 1/2^n}
    std::vector<std::int64_t> blur_kernels = {3, 5, 7};
    std::int64_t warmup_steps = 0;

    void validate() const {
        if (feature_prob < 0.0 || feature_prob > 1.0 || data_prob < 0.0 || data_prob > 1.0)
            throw ConfigError("DegradeConfig: probabilities must be in [0, 1]");
        if (scale_lo <= 0.0 || scale_hi > 1.0 || scale_lo > scale_hi)
            throw ConfigError("DegradeConfig: scale range must be within (0, 1]");
        if (n_scales < 1) throw ConfigError("DegradeConfig: n_scales must be >= 1");
        for (std::int64_t k : blur_kernels)
            if (k < 3 || k % 2 == 0) throw ConfigError("DegradeConfig: blur kernels must be odd and >= 3");
    }
};

// Fusion scale for one training step: with probability feature_prob a
// uniform draw from [scale_lo, scale_hi], otherwise 1 (no degradation).
inline double draw_feature_scale(const DegradeConfig& config, Rng& rng) {
    if (rng.uniform() < config.feature_prob) return rng.uniform(config.scale_lo, config.scale_hi);
    return 1.0;
}

namespace detail {

inline double lerp(double a, double b, double f) { return a + f * (b - a); }

// Bilinear sample of frame channel (t, c) at continuous source coords.
inline double bilinear_at(const VideoTensor& v, std::int64_t t, std::int64_t c, double sy, double sx) {
    const auto y0 = static_cast<std::int64_t>(std::floor(sy));
    const auto x0 = static_cast<std::int64_t>(std::floor(sx));
    const double fy = sy - static_cast<double>(y0);
    const double fx = sx - static_cast<double>(x0);
    auto cy = [&](std::int64_t y) { return std::clamp(y, std::int64_t{0}, v.h - 1); };
    auto cx = [&](std::int64_t x) { return std::clamp(x, std::int64_t{0}, v.w - 1); };
    const double p00 = v.at(t, c, cy(y0), cx(x0));
    const double p01 = v.at(t, c, cy(y0), cx(x0 + 1));
    const double p10 = v.at(t, c, cy(y0 + 1), cx(x0));
    const double p11 = v.at(t, c, cy(y0 + 1), cx(x0 + 1));
    return lerp(lerp(p00, p01, fx), lerp(p10, p11, fx), fy);
}

}  // namespace detail

// Bilinear resample of every frame to (out_h, out_w).
inline VideoTensor bilinear_resize(const VideoTensor& v, std::int64_t out_h, std::int64_t out_w) {
    if (out_h < 1 || out_w < 1) throw InvalidInput("bilinear_resize: target dims must be >= 1");
    VideoTensor out(v.t, v.c, out_h, out_w);
    const double sy_scale = static_cast<double>(v.h) / static_cast<double>(out_h);
    const double sx_scale = static_cast<double>(v.w) / static_cast<double>(out_w);
    for (std::int64_t t = 0; t < v.t; ++t)
        for (std::int64_t c = 0; c < v.c; ++c)
            for (std::int64_t y = 0; y < out_h; ++y)
                for (std::int64_t x = 0; x < out_w; ++x) {
                    const double sy = (static_cast<double>(y) + 0.5) * sy_scale - 0.5;
                    const double sx = (static_cast<double>(x) + 0.5) * sx_scale - 0.5;
                    out.at(t, c, y, x) = detail::bilinear_at(v, t, c, sy, sx);
                }
    return out;
}

// Detail of one fusion draw, exposed for the statistical tests.
struct ScaleFusionDraw {
    std::vector<double> scales;        // retained scales
    std::vector<double> weights;       // normalized, sum to 1
    std::int64_t excluded_index = -1;  // index into the full scale set
};

// Multi-resolution convex blend: drop one scale at random, resample each
// retained scale down and back up, and mix with random weights summing to 1.
inline VideoTensor random_scale_fusion(const VideoTensor& dense, const DegradeConfig& config, Rng& rng,
                                       ScaleFusionDraw* draw = nullptr) {
    config.validate();
    const std::int64_t n_set = config.n_scales + 1;
    const double smallest = std::pow(0.5, static_cast<double>(config.n_scales));
    if (static_cast<double>(dense.h) * smallest < 1.0 || static_cast<double>(dense.w) * smallest < 1.0)
        throw InvalidInput("random_scale_fusion: frame too small for the smallest scale");

    const auto excluded = static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(n_set)));
    std::vector<double> scales;
    for (std::int64_t i = 0; i < n_set; ++i)
        if (i != excluded) scales.push_back(std::pow(0.5, static_cast<double>(i)));

    std::vector<double> weights(scales.size());
    double wsum = 0.0;
    for (double& w : weights) {
        w = rng.uniform();
        wsum += w;
    }
    for (double& w : weights) w /= wsum;

    std::vector<VideoTensor> candidates;
    candidates.reserve(scales.size());
    for (double s : scales) {
        if (s == 1.0) {
            candidates.push_back(dense);
            continue;
        }
        const auto sh = static_cast<std::int64_t>(std::floor(s * static_cast<double>(dense.h)));
        const auto sw = static_cast<std::int64_t>(std::floor(s * static_cast<double>(dense.w)));
        candidates.push_back(bilinear_resize(bilinear_resize(dense, sh, sw), dense.h, dense.w));
    }

    // Rebased convex combination: exact on constant inputs.
    VideoTensor out = candidates[0];
    for (std::size_t s = 1; s < candidates.size(); ++s)
        for (std::size_t i = 0; i < out.data.size(); ++i)
            out.data[i] += weights[s] * (candidates[s].data[i] - candidates[0].data[i]);

    if (draw) {
        draw->scales = std::move(scales);
        draw->weights = std::move(weights);
        draw->excluded_index = excluded;
    }
    return out;
}

namespace detail {
// Symmetric (edge-including) mirror index, period 2n.
inline std::int64_t mirror_index(std::int64_t i, std::int64_t n) {
    const std::int64_t period = 2 * n;
    std::int64_t m = i % period;
    if (m < 0) m += period;
    return m < n ? m : period - 1 - m;
}
}  // namespace detail

// Per-frame box blur with one randomly drawn odd kernel; symmetric reflect
// padding so the global frame mean is preserved.
inline VideoTensor adaptive_blur(const VideoTensor& dense, const DegradeConfig& config, Rng& rng) {
    config.validate();
    const std::int64_t k = config.blur_kernels[rng.uniform_int(config.blur_kernels.size())];
    if (k > std::max(dense.h, dense.w)) throw InvalidInput("adaptive_blur: kernel larger than frame");
    const std::int64_t r = k / 2;
    VideoTensor out(dense.t, dense.c, dense.h, dense.w);
    for (std::int64_t t = 0; t < dense.t; ++t)
        for (std::int64_t c = 0; c < dense.c; ++c)
            for (std::int64_t y = 0; y < dense.h; ++y)
                for (std::int64_t x = 0; x < dense.w; ++x) {
                    double acc = 0.0;
                    for (std::int64_t dy = -r; dy <= r; ++dy)
                        for (std::int64_t dx = -r; dx <= r; ++dx)
                            acc += dense.at(t, c, detail::mirror_index(y + dy, dense.h),
                                            detail::mirror_index(x + dx, dense.w));
                    out.at(t, c, y, x) = acc / static_cast<double>(k * k);
                }
    return out;
}

enum class DataDegradeChoice { None, Fusion, Blur, Both };

// Data-level degradation: with probability data_prob, apply fusion, blur, or
// both (blur after fusion), chosen uniformly.
inline VideoTensor apply_data_degradation(const VideoTensor& dense, const DegradeConfig& config, Rng& rng,
                                          DataDegradeChoice* chosen = nullptr) {
    config.validate();
    if (rng.uniform() >= config.data_prob) {
        if (chosen) *chosen = DataDegradeChoice::None;
        return dense;
    }
    const std::uint64_t pick = rng.uniform_int(3);
    if (chosen) *chosen = pick == 0 ? DataDegradeChoice::Fusion : (pick == 1 ? DataDegradeChoice::Blur : DataDegradeChoice::Both);
    switch (pick) {
        case 0: return random_scale_fusion(dense, config, rng);
        case 1: return adaptive_blur(dense, config, rng);
        default: return adaptive_blur(random_scale_fusion(dense, config, rng), config, rng);
    }
}

}  // namespace lvgen
