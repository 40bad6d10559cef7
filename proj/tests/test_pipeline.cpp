// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "lvgen/pipeline.hpp"

namespace {

using lvgen::ControlDiT;
using lvgen::Param;
using lvgen::PipelineConfig;
using lvgen::VideoTensor;

PipelineConfig micro_pipeline() {
    PipelineConfig pc;
    pc.clip_len = 5;
    pc.overlap = 1;
    pc.model.token_dim = 4;
    pc.model.n_base_blocks = 2;
    pc.model.n_control_blocks = 1;
    pc.model.n_heads = 2;
    pc.model.patch = 2;
    pc.model.timesteps = 8;
    pc.model.lat_t = 5;
    pc.model.lat_c = 1;
    pc.model.lat_h = 4;
    pc.model.lat_w = 4;
    pc.train_steps = 10;
    pc.batch_size = 1;
    pc.keypoints_per_clip = 4;
    pc.degrade.n_scales = 2;
    pc.seed = 77;
    return pc;
}

std::vector<double> weights_of(ControlDiT& m, bool frozen_only) {
    std::vector<double> out;
    auto collect = [&](const std::string&, Param& p) { out.insert(out.end(), p.w.begin(), p.w.end()); };
    if (frozen_only)
        m.visit_frozen(collect);
    else
        m.visit_all(collect);
    return out;
}

TEST(Train, ZeroStepsKeepsInitWeights) {
    PipelineConfig pc = micro_pipeline();
    pc.train_steps = 0;
    const auto dataset = lvgen::make_dataset(1, 3, 8, 8, 5, 5, 1, 4);
    auto result = lvgen::train(pc, dataset);
    ControlDiT fresh = lvgen::init_model(pc.model, pc.seed);
    EXPECT_EQ(weights_of(result.model, false), weights_of(fresh, false));
    EXPECT_TRUE(result.losses.empty());
}

TEST(Train, FrozenBaseUnchangedAndLossesRecorded) {
    PipelineConfig pc = micro_pipeline();
    pc.train_steps = 25;
    const auto dataset = lvgen::make_dataset(2, 5, 8, 8, 9, 5, 1, 4);
    ControlDiT fresh = lvgen::init_model(pc.model, pc.seed);
    const auto frozen_before = weights_of(fresh, true);
    auto result = lvgen::train(pc, dataset);
    EXPECT_EQ(weights_of(result.model, true), frozen_before);
    EXPECT_EQ(result.losses.size(), 25u);
    for (double loss : result.losses) EXPECT_TRUE(std::isfinite(loss));
}

TEST(Train, Validation) {
    PipelineConfig pc = micro_pipeline();
    EXPECT_THROW(lvgen::train(pc, {}), lvgen::InvalidInput);
    const auto dataset = lvgen::make_dataset(1, 3, 8, 8, 9, 9, 1, 4);  // 9-frame clips
    EXPECT_THROW(lvgen::train(pc, dataset), lvgen::InvalidInput);
}

TEST(Stitch, LengthLawAndOwnership) {
    std::vector<VideoTensor> clips(10, VideoTensor(49, 1, 2, 2));
    EXPECT_EQ(lvgen::stitch(clips, 1).t, 481);

    VideoTensor one(7, 1, 2, 2);
    EXPECT_EQ(lvgen::stitch({one}, 1).data, one.data);

    VideoTensor a(3, 1, 1, 1), b(3, 1, 1, 1);
    a.data = {1.0, 2.0, 3.0};
    b.data = {-3.0, 4.0, 5.0};  // overlapped frame differs from clip 1's copy
    const VideoTensor out = lvgen::stitch({a, b}, 1);
    EXPECT_EQ(out.data, (std::vector<double>{1.0, 2.0, 3.0, 4.0, 5.0}));

    VideoTensor short_clip(1, 1, 1, 1);
    EXPECT_THROW(lvgen::stitch({a, short_clip}, 1), lvgen::InvalidInput);
    VideoTensor wrong_shape(3, 1, 2, 2);
    EXPECT_THROW(lvgen::stitch({a, wrong_shape}, 1), lvgen::InvalidInput);
}

TEST(GenerateLong, DeterministicWithExactLengthAndAnchors) {
    PipelineConfig pc = micro_pipeline();
    lvgen::SyntheticScene scene;
    scene.width = 8;
    scene.height = 8;
    scene.n_frames = 13;
    lvgen::SceneObject obj;
    obj.shape = lvgen::ShapeKind::Circle;
    obj.size = 2.0;
    obj.x0 = 3.0;
    obj.y0 = 4.0;
    obj.vx = 1.0;
    obj.depth = 0.5;
    scene.objects.push_back(obj);
    const auto rendered = lvgen::render_scene(scene);
    const ControlDiT model = lvgen::init_model(pc.model, 5);

    const auto gen1 = lvgen::generate_long(model, rendered.depth, rendered, pc);
    const auto gen2 = lvgen::generate_long(model, rendered.depth, rendered, pc);
    EXPECT_EQ(gen1.video.data, gen2.video.data);
    EXPECT_EQ(gen1.video.t, 13);
    ASSERT_EQ(gen1.trace.clips.size(), 3u);
    ASSERT_EQ(gen1.trace.anchors.size(), 3u);
    EXPECT_EQ(gen1.trace.boundary_ssim.size(), 2u);

    // Anchor chain: anchor i equals the final generated latent frame of clip
    // i-1 (the decode/encode round trip is exact for the identity codec).
    for (std::size_t i = 1; i < gen1.trace.clips.size(); ++i) {
        const VideoTensor final_latent =
            lvgen::encode_latent(gen1.trace.clips[i - 1].frame(gen1.trace.clips[i - 1].t - 1));
        EXPECT_EQ(gen1.trace.anchors[i].data, final_latent.data);
    }
    // Clip 0 anchors on the ground-truth first frame.
    EXPECT_EQ(gen1.trace.anchors[0].data, lvgen::encode_latent(rendered.frames.frame(0)).data);
}

TEST(GenerateLong, NoiseBookkeeping) {
    PipelineConfig pc = micro_pipeline();
    lvgen::SyntheticScene scene;
    scene.width = 8;
    scene.height = 8;
    scene.n_frames = 13;
    const auto rendered = lvgen::render_scene(scene);
    const ControlDiT model = lvgen::init_model(pc.model, 5);

    pc.noise_plan.mode = lvgen::NoiseMode::Unified;
    const auto unified = lvgen::generate_long(model, rendered.depth, rendered, pc);
    for (double r : unified.trace.noise_rmse_to_first) EXPECT_EQ(r, 0.0);

    pc.noise_plan.mode = lvgen::NoiseMode::PerClip;
    const auto per_clip = lvgen::generate_long(model, rendered.depth, rendered, pc);
    EXPECT_EQ(per_clip.trace.noise_rmse_to_first[0], 0.0);
    for (std::size_t i = 1; i < per_clip.trace.noise_rmse_to_first.size(); ++i)
        EXPECT_GT(per_clip.trace.noise_rmse_to_first[i], 0.0);
}

TEST(GenerateLong, NonCoverableLengthThrows) {
    PipelineConfig pc = micro_pipeline();
    lvgen::SyntheticScene scene;
    scene.width = 8;
    scene.height = 8;
    scene.n_frames = 12;  // (12 - 5) % 4 != 0
    const auto rendered = lvgen::render_scene(scene);
    const ControlDiT model = lvgen::init_model(pc.model, 5);
    EXPECT_THROW(lvgen::generate_long(model, rendered.depth, rendered, pc), lvgen::InvalidInput);
}

TEST(Normalization, DriftingSceneDiscontinuityGap) {
    // Depth drifts across clips; per-clip normalization tears the control
    // signal at ownership changes while global normalization stays smooth.
    lvgen::SyntheticScene scene;
    scene.width = 8;
    scene.height = 8;
    scene.n_frames = 13;
    scene.depth_drift_per_frame = 0.5;
    const auto rendered = lvgen::render_scene(scene);
    const auto plan = lvgen::plan_clips(13, 5, 1);
    const VideoTensor global = lvgen::global_normalize(rendered.depth);
    const VideoTensor per_clip = lvgen::per_clip_normalize(rendered.depth, plan);

    auto discontinuity = [&](const VideoTensor& v) {
        double acc = 0.0;
        for (std::size_t i = 1; i < plan.starts.size(); ++i) {
            const std::int64_t s = plan.starts[i];
            acc += std::abs(v.at(s, 0, 4, 4) - v.at(s - 1, 0, 4, 4));
        }
        return acc / static_cast<double>(plan.starts.size() - 1);
    };
    EXPECT_GE(discontinuity(per_clip), 2.0 * discontinuity(global));
}

}  // namespace
