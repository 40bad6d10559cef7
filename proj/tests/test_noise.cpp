// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include <gtest/gtest.h>

#include "lvgen/noise.hpp"

namespace {

using lvgen::NoiseMode;
using lvgen::NoisePlan;
using lvgen::VideoTensor;

NoisePlan big_plan(NoiseMode mode, double alpha = 0.0) {
    NoisePlan plan;
    plan.mode = mode;
    plan.seed = 42;
    plan.perturb_alpha = alpha;
    plan.lat_t = 50;
    plan.lat_c = 1;
    plan.lat_h = 50;
    plan.lat_w = 50;  // 125000 elements
    return plan;
}

TEST(NoiseForClip, UnifiedIsIdenticalAcrossClips) {
    const NoisePlan plan = big_plan(NoiseMode::Unified);
    EXPECT_EQ(lvgen::noise_for_clip(plan, 0).data, lvgen::noise_for_clip(plan, 7).data);
}

TEST(NoiseForClip, PerturbedAlphaZeroEqualsUnified) {
    const NoisePlan unified = big_plan(NoiseMode::Unified);
    const NoisePlan perturbed = big_plan(NoiseMode::Perturbed, 0.0);
    for (std::int64_t ci : {0, 3, 9})
        EXPECT_EQ(lvgen::noise_for_clip(perturbed, ci).data, lvgen::noise_for_clip(unified, 0).data);
}

TEST(NoiseForClip, PerClipPairRmseNearSqrt2) {
    const NoisePlan plan = big_plan(NoiseMode::PerClip);
    const VideoTensor a = lvgen::noise_for_clip(plan, 0);
    const VideoTensor b = lvgen::noise_for_clip(plan, 1);
    EXPECT_NEAR(lvgen::noise_rmse(a, b), std::sqrt(2.0), 0.02 * std::sqrt(2.0));
}

TEST(NoiseForClip, PerturbedRmseNearAlpha) {
    const NoisePlan base = big_plan(NoiseMode::Unified);
    const NoisePlan perturbed = big_plan(NoiseMode::Perturbed, 0.5);
    const double rmse = lvgen::noise_rmse(lvgen::noise_for_clip(perturbed, 3), lvgen::noise_for_clip(base, 0));
    EXPECT_NEAR(rmse, 0.5, 0.02 * 0.5);
}

TEST(NoiseForClip, RmseMonotoneInAlpha) {
    const NoisePlan base = big_plan(NoiseMode::Unified);
    const VideoTensor unified = lvgen::noise_for_clip(base, 0);
    double prev = -1.0;
    for (double alpha : {0.05, 0.5, 1.0}) {
        const double rmse = lvgen::noise_rmse(lvgen::noise_for_clip(big_plan(NoiseMode::Perturbed, alpha), 2), unified);
        EXPECT_GT(rmse, prev);
        prev = rmse;
    }
}

TEST(NoiseForClip, Determinism) {
    for (NoiseMode mode : {NoiseMode::Unified, NoiseMode::PerClip, NoiseMode::Perturbed}) {
        const NoisePlan plan = big_plan(mode, 0.3);
        EXPECT_EQ(lvgen::noise_for_clip(plan, 4).data, lvgen::noise_for_clip(plan, 4).data);
    }
}

TEST(NoiseForClip, SampleStatistics) {
    const VideoTensor n = lvgen::noise_for_clip(big_plan(NoiseMode::Unified), 0);
    double mean = 0.0;
    for (double v : n.data) mean += v;
    mean /= static_cast<double>(n.data.size());
    double var = 0.0;
    for (double v : n.data) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n.data.size());
    EXPECT_NEAR(mean, 0.0, 0.02);
    EXPECT_NEAR(var, 1.0, 0.05);
}

TEST(NoiseForClip, BadInputs) {
    NoisePlan plan = big_plan(NoiseMode::Unified);
    EXPECT_THROW(lvgen::noise_for_clip(plan, -1), lvgen::InvalidInput);
    plan.lat_t = 0;
    EXPECT_THROW(lvgen::noise_for_clip(plan, 0), lvgen::InvalidInput);
}

TEST(NoiseRmse, ClosedForms) {
    VideoTensor a(2, 1, 3, 3), b(2, 1, 3, 3);
    EXPECT_DOUBLE_EQ(lvgen::noise_rmse(a, a), 0.0);
    for (double& v : b.data) v = 2.0;
    EXPECT_DOUBLE_EQ(lvgen::noise_rmse(a, b), 2.0);
    VideoTensor c(1, 1, 3, 3);
    EXPECT_THROW(lvgen::noise_rmse(a, c), lvgen::InvalidInput);
}

}  // namespace
