// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "lvgen/common.hpp"
#include "lvgen/signal.hpp"
#include "lvgen/tensor.hpp"

namespace lvgen {

// Single-scale SSIM over uniform sliding windows (7x7, or smaller when the
// frame is smaller), C1/C2 from K1 = 0.01, K2 = 0.03, dynamic range 1.
inline double ssim(const VideoTensor& a, const VideoTensor& b) {
    require_same_shape(a, b, "ssim");
    if (a.t != 1) throw InvalidInput("ssim: expects single frames");
    constexpr double kC1 = 0.01 * 0.01;
    constexpr double kC2 = 0.03 * 0.03;
    const std::int64_t win = std::min<std::int64_t>({7, a.h, a.w});
    const double n_win = static_cast<double>(win * win);
    double acc = 0.0;
    std::int64_t count = 0;
    for (std::int64_t c = 0; c < a.c; ++c)
        for (std::int64_t y = 0; y + win <= a.h; ++y)
            for (std::int64_t x = 0; x + win <= a.w; ++x) {
                double sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
                for (std::int64_t dy = 0; dy < win; ++dy)
                    for (std::int64_t dx = 0; dx < win; ++dx) {
                        const double va = a.at(0, c, y + dy, x + dx);
                        const double vb = b.at(0, c, y + dy, x + dx);
                        sa += va;
                        sb += vb;
                        saa += va * va;
                        sbb += vb * vb;
                        sab += va * vb;
                    }
                const double mu_a = sa / n_win;
                const double mu_b = sb / n_win;
                const double var_a = saa / n_win - mu_a * mu_a;
                const double var_b = sbb / n_win - mu_b * mu_b;
                const double cov = sab / n_win - mu_a * mu_b;
                const double num = (2.0 * mu_a * mu_b + kC1) * (2.0 * cov + kC2);
                const double den = (mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2);
                acc += num / den;
                ++count;
            }
    return acc / static_cast<double>(count);
}

// SSIM between the adjacent stitched frames straddling each internal clip
// boundary (earlier-wins stitching).
inline std::vector<double> boundary_consistency(const VideoTensor& video, const ClipPlan& plan) {
    if (plan.total_frames != video.t) throw InvalidInput("boundary_consistency: plan does not match video");
    std::vector<double> out;
    for (std::size_t i = 1; i < plan.starts.size(); ++i) {
        const std::int64_t first_new = plan.starts[i] + plan.overlap;
        out.push_back(ssim(video.frame(first_new - 1), video.frame(first_new)));
    }
    return out;
}

// Mean absolute difference between consecutive frames; lower is calmer.
inline double flicker(const VideoTensor& video) {
    if (video.t < 2) throw InvalidInput("flicker: need at least 2 frames");
    const std::size_t stride = static_cast<std::size_t>(video.c * video.h * video.w);
    double acc = 0.0;
    for (std::int64_t t = 0; t + 1 < video.t; ++t) {
        const double* cur = &video.data[static_cast<std::size_t>(t) * stride];
        const double* nxt = cur + stride;
        double frame_acc = 0.0;
        for (std::size_t i = 0; i < stride; ++i) frame_acc += std::abs(nxt[i] - cur[i]);
        acc += frame_acc / static_cast<double>(stride);
    }
    return acc / static_cast<double>(video.t - 1);
}

inline double video_rmse(const VideoTensor& a, const VideoTensor& b) {
    require_same_shape(a, b, "video_rmse");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(a.data.size()));
}

struct ClipRecord {
    std::int64_t clip_index = 0;
    double mean_ssim_to_reference = 0.0;
    double noise_rmse_to_first = 0.0;
};

struct BoundaryRecord {
    std::int64_t boundary_index = 0;
    double ssim_across_boundary = 0.0;
};

// Per-clip / per-boundary metric records; the global SSIM and flicker values
// are desk-scale proxies, not learned perceptual metrics.
struct MetricsReport {
    std::vector<ClipRecord> per_clip;
    std::vector<BoundaryRecord> per_boundary;
    double mean_ssim = 0.0;
    double flicker_value = 0.0;
    double rmse_to_reference = 0.0;

    double mean_boundary_ssim() const {
        if (per_boundary.empty()) return 1.0;
        double acc = 0.0;
        for (const auto& b : per_boundary) acc += b.ssim_across_boundary;
        return acc / static_cast<double>(per_boundary.size());
    }
};

}  // namespace lvgen
