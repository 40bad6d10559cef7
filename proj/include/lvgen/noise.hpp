// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>

#include "lvgen/common.hpp"
#include "lvgen/rng.hpp"
#include "lvgen/tensor.hpp"

namespace lvgen {

enum class NoiseMode { Unified, PerClip, Perturbed };

// Policy for per-clip initialization noise. Unified reuses one tensor for
// every clip; PerClip draws independent tensors; Perturbed adds
// perturb_alpha * g on top of the unified base (alpha = 0 is exactly Unified).
struct NoisePlan {
    NoiseMode mode = NoiseMode::Unified;
    std::uint64_t seed = 0;
    double perturb_alpha = 0.0;
    std::int64_t lat_t = 1, lat_c = 1, lat_h = 1, lat_w = 1;

    void validate() const {
        if (lat_t < 1 || lat_c < 1 || lat_h < 1 || lat_w < 1)
            throw InvalidInput("NoisePlan: latent dims must be >= 1");
        if (perturb_alpha < 0.0) throw InvalidInput("NoisePlan: perturb_alpha must be >= 0");
    }
};

namespace detail {
constexpr std::uint64_t kNoiseBaseTag = 0x6C76626173650000ULL;
constexpr std::uint64_t kNoiseClipTag = 0x6C76636C69700000ULL;

inline VideoTensor gaussian_tensor(const NoisePlan& plan, std::uint64_t key) {
    VideoTensor out(plan.lat_t, plan.lat_c, plan.lat_h, plan.lat_w);
    Rng rng(key);
    for (double& v : out.data) v = rng.normal();
    return out;
}
}  // namespace detail

inline VideoTensor noise_for_clip(const NoisePlan& plan, std::int64_t clip_index) {
    plan.validate();
    if (clip_index < 0) throw InvalidInput("noise_for_clip: clip_index must be >= 0");
    const std::uint64_t base_key = stream_key(plan.seed, detail::kNoiseBaseTag, 0);
    switch (plan.mode) {
        case NoiseMode::Unified:
            return detail::gaussian_tensor(plan, base_key);
        case NoiseMode::PerClip:
            return detail::gaussian_tensor(
                plan, stream_key(plan.seed, detail::kNoiseClipTag, static_cast<std::uint64_t>(clip_index)));
        case NoiseMode::Perturbed: {
            VideoTensor base = detail::gaussian_tensor(plan, base_key);
            const VideoTensor g = detail::gaussian_tensor(
                plan, stream_key(plan.seed, detail::kNoiseClipTag, static_cast<std::uint64_t>(clip_index)));
            for (std::size_t i = 0; i < base.data.size(); ++i) base.data[i] += plan.perturb_alpha * g.data[i];
            return base;
        }
    }
    throw InvalidInput("noise_for_clip: unknown mode");
}

inline double noise_rmse(const VideoTensor& a, const VideoTensor& b) {
    require_same_shape(a, b, "noise_rmse");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(a.data.size()));
}

}  // namespace lvgen
