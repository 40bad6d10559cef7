// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "lvgen/common.hpp"
#include "lvgen/degrade.hpp"
#include "lvgen/eval.hpp"
#include "lvgen/model.hpp"
#include "lvgen/noise.hpp"
#include "lvgen/signal.hpp"
#include "lvgen/synthdata.hpp"
#include "lvgen/tensor.hpp"

namespace lvgen {

enum class NormalizationMode { Global, PerClip };

struct PipelineConfig {
    std::int64_t clip_len = 49;
    std::int64_t overlap = 1;
    NormalizationMode normalization = NormalizationMode::Global;
    NoisePlan noise_plan;
    DegradeConfig degrade;
    ModelConfig model;
    std::int64_t train_steps = 200;
    std::int64_t batch_size = 2;
    double learning_rate = 1e-3;
    std::int64_t keypoints_per_clip = 16;
    std::uint64_t seed = 0;

    void validate() const {
        model.validate();
        degrade.validate();
        if (clip_len != model.lat_t) throw ConfigError("PipelineConfig: clip_len must equal latent T");
        if (overlap < 0 || overlap >= clip_len) throw ConfigError("PipelineConfig: bad overlap");
        if (batch_size < 1 || train_steps < 0) throw ConfigError("PipelineConfig: bad training params");
        NoisePlan np = noise_plan;
        np.lat_t = model.lat_t;
        np.lat_c = model.lat_c;
        np.lat_h = model.lat_h;
        np.lat_w = model.lat_w;
        np.validate();
    }

    NoisePlan resolved_noise_plan() const {
        NoisePlan np = noise_plan;
        np.lat_t = model.lat_t;
        np.lat_c = model.lat_c;
        np.lat_h = model.lat_h;
        np.lat_w = model.lat_w;
        return np;
    }
};

struct TrainResult {
    ControlDiT model;
    std::vector<double> losses;
};

// Clip-wise training: independent clips, uniform timestep, fresh noise, and
// the degradation strategies after warmup.
inline TrainResult train(const PipelineConfig& config, const std::vector<TrainingPair>& dataset) {
    config.validate();
    if (dataset.empty()) throw InvalidInput("train: empty dataset");
    for (const auto& pair : dataset) {
        if (pair.clip.t != config.clip_len || pair.control.dense.t != config.clip_len)
            throw InvalidInput("train: clip length mismatch");
    }
    TrainResult result;
    result.model = init_model(config.model, config.seed);
    ControlDiT& model = result.model;
    AdamW opt;
    opt.attach(model.trainable_params());

    Rng rng(stream_key(config.seed, 0x747261696E000000ULL, 0));
    const auto n_items = static_cast<std::uint64_t>(dataset.size());
    for (std::int64_t step = 0; step < config.train_steps; ++step) {
        const bool degrade_active = step >= config.degrade.warmup_steps;
        double batch_loss = 0.0;
        for (std::int64_t bi = 0; bi < config.batch_size; ++bi) {
            const auto& item = dataset[rng.uniform_int(n_items)];
            const auto t = static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(config.model.timesteps)));
            const VideoTensor x0 = encode_latent(item.clip);
            VideoTensor eps(x0.t, x0.c, x0.h, x0.w);
            for (double& v : eps.data) v = rng.normal();
            const double fusion_scale = degrade_active ? draw_feature_scale(config.degrade, rng) : 1.0;
            ControlPair control = item.control;
            if (degrade_active) control.dense = apply_data_degradation(control.dense, config.degrade, rng);
            const VideoTensor anchor = encode_latent(item.clip.frame(0));
            batch_loss += diffusion_loss_backward(model, x0, control, anchor, t, eps, fusion_scale);
        }
        // Average the accumulated batch gradient before stepping.
        const double inv_b = 1.0 / static_cast<double>(config.batch_size);
        model.visit_trainable([&](const std::string&, Param& p) {
            for (double& g : p.g) g *= inv_b;
        });
        backward_and_step(model, opt, config.learning_rate);
        result.losses.push_back(batch_loss * inv_b);
    }
    return result;
}

// Concatenate clips, dropping the first `overlap` frames of every clip after
// the first (the earlier copy of an overlapped frame survives).
inline VideoTensor stitch(const std::vector<VideoTensor>& clips, std::int64_t overlap) {
    if (clips.empty()) throw InvalidInput("stitch: no clips");
    for (const auto& clip : clips) {
        if (clip.c != clips[0].c || clip.h != clips[0].h || clip.w != clips[0].w)
            throw InvalidInput("stitch: inconsistent clip shapes");
        if (clip.t <= overlap) throw InvalidInput("stitch: clip length must exceed overlap");
    }
    std::int64_t total = clips[0].t;
    for (std::size_t i = 1; i < clips.size(); ++i) total += clips[i].t - overlap;
    VideoTensor out(total, clips[0].c, clips[0].h, clips[0].w);
    const std::size_t stride = static_cast<std::size_t>(out.c * out.h * out.w);
    std::int64_t cursor = 0;
    for (std::size_t i = 0; i < clips.size(); ++i) {
        const std::int64_t skip = i == 0 ? 0 : overlap;
        const std::int64_t len = clips[i].t - skip;
        std::copy(clips[i].data.begin() + static_cast<std::ptrdiff_t>(skip * static_cast<std::int64_t>(stride)),
                  clips[i].data.end(),
                  out.data.begin() + static_cast<std::ptrdiff_t>(cursor * static_cast<std::int64_t>(stride)));
        cursor += len;
    }
    return out;
}

struct GenerationTrace {
    std::vector<VideoTensor> clips;    // decoded pixel clips
    std::vector<VideoTensor> anchors;  // latent anchor frames, one per clip
    std::vector<double> noise_rmse_to_first;
    std::vector<double> boundary_ssim;
};

struct GenerationResult {
    VideoTensor video;  // stitched pixel video
    GenerationTrace trace;
};

// Autoregressive long generation: normalize, segment, per-clip point maps and
// noise, anchor chaining, deterministic sampling, earlier-wins stitching.
inline GenerationResult generate_long(const ControlDiT& model, const VideoTensor& depth_video,
                                      const RenderedScene& scene, const PipelineConfig& config) {
    config.validate();
    const ClipPlan plan = plan_clips(depth_video.t, config.clip_len, config.overlap);
    const NoisePlan noise_plan = config.resolved_noise_plan();

    // Global mode normalizes the full sequence before segmentation.
    VideoTensor norm_depth = config.normalization == NormalizationMode::Global
                                 ? global_normalize(depth_video)
                                 : per_clip_normalize(depth_video, plan);

    GenerationResult result;
    VideoTensor first_noise;
    VideoTensor anchor = encode_latent(scene.frames.frame(0));  // ground-truth first frame
    for (std::int64_t ci = 0; ci < plan.n_clips(); ++ci) {
        const std::int64_t start = plan.starts[static_cast<std::size_t>(ci)];
        ControlPair control;
        control.dense = norm_depth.window(start, config.clip_len);
        const auto points = sample_keypoints(depth_video.h, depth_video.w, config.keypoints_per_clip);
        const auto tracks = track_keypoints(scene.motion, norm_depth, points, start, config.clip_len);
        control.sparse = render_point_map(tracks, config.clip_len, depth_video.h, depth_video.w);

        const VideoTensor noise = noise_for_clip(noise_plan, ci);
        if (ci == 0) first_noise = noise;
        const VideoTensor latent = sample_clip(model, noise, control, anchor);
        VideoTensor pixels = decode_latent(latent);

        result.trace.anchors.push_back(anchor);
        result.trace.noise_rmse_to_first.push_back(noise_rmse(noise, first_noise));
        anchor = latent.frame(latent.t - 1);  // final generated frame conditions the next clip
        result.trace.clips.push_back(std::move(pixels));
    }
    result.video = stitch(result.trace.clips, config.overlap);
    result.trace.boundary_ssim = boundary_consistency(result.video, plan);
    return result;
}

}  // namespace lvgen
