// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include <json.hpp>

#include "lvgen/eval.hpp"
#include "lvgen/pipeline.hpp"

namespace lvgen {

inline std::string normalization_name(NormalizationMode m) {
    return m == NormalizationMode::Global ? "global" : "per_clip";
}

inline std::string noise_mode_name(NoiseMode m) {
    switch (m) {
        case NoiseMode::Unified: return "unified";
        case NoiseMode::PerClip: return "per_clip";
        case NoiseMode::Perturbed: return "perturbed";
    }
    return "unknown";
}

inline nlohmann::json pipeline_config_to_json(const PipelineConfig& c) {
    nlohmann::json j;
    j["clip_len"] = c.clip_len;
    j["overlap"] = c.overlap;
    j["normalization"] = normalization_name(c.normalization);
    j["noise_mode"] = noise_mode_name(c.noise_plan.mode);
    j["perturb_alpha"] = c.noise_plan.perturb_alpha;
    j["feature_prob"] = c.degrade.feature_prob;
    j["data_prob"] = c.degrade.data_prob;
    j["n_scales"] = c.degrade.n_scales;
    j["scale_lo"] = c.degrade.scale_lo;
    j["scale_hi"] = c.degrade.scale_hi;
    j["warmup_steps"] = c.degrade.warmup_steps;
    j["token_dim"] = c.model.token_dim;
    j["n_base_blocks"] = c.model.n_base_blocks;
    j["n_control_blocks"] = c.model.n_control_blocks;
    j["n_heads"] = c.model.n_heads;
    j["patch"] = c.model.patch;
    j["timesteps"] = c.model.timesteps;
    j["train_steps"] = c.train_steps;
    j["batch_size"] = c.batch_size;
    j["learning_rate"] = c.learning_rate;
    j["keypoints_per_clip"] = c.keypoints_per_clip;
    j["seed"] = c.seed;
    return j;
}

// Canonical (alphabetical) key order comes from nlohmann's object ordering.
inline nlohmann::json metrics_report_to_json(const MetricsReport& report, const PipelineConfig& config) {
    nlohmann::json j;
    j["config_echo"] = pipeline_config_to_json(config);
    j["global"]["mean_ssim"] = report.mean_ssim;
    j["global"]["flicker"] = report.flicker_value;
    j["global"]["video_rmse"] = report.rmse_to_reference;
    j["global"]["mean_boundary_ssim"] = report.mean_boundary_ssim();
    j["per_clip"] = nlohmann::json::array();
    for (const auto& rec : report.per_clip) {
        nlohmann::json c;
        c["clip_index"] = rec.clip_index;
        c["mean_ssim_to_reference"] = rec.mean_ssim_to_reference;
        c["noise_rmse_to_first"] = rec.noise_rmse_to_first;
        j["per_clip"].push_back(c);
    }
    j["per_boundary"] = nlohmann::json::array();
    for (const auto& rec : report.per_boundary) {
        nlohmann::json b;
        b["boundary_index"] = rec.boundary_index;
        b["ssim_across_boundary"] = rec.ssim_across_boundary;
        j["per_boundary"].push_back(b);
    }
    return j;
}

// Flattened CSV: one row per clip, then one row per boundary.
inline std::string metrics_report_to_csv(const MetricsReport& report) {
    std::string out = "kind,index,mean_ssim_to_reference,noise_rmse_to_first,ssim_across_boundary\n";
    for (const auto& rec : report.per_clip)
        out += "clip," + std::to_string(rec.clip_index) + "," + std::to_string(rec.mean_ssim_to_reference) + "," +
               std::to_string(rec.noise_rmse_to_first) + ",\n";
    for (const auto& rec : report.per_boundary)
        out += "boundary," + std::to_string(rec.boundary_index) + ",,," + std::to_string(rec.ssim_across_boundary) +
               "\n";
    return out;
}

// Per-clip and boundary metrics of a generated video against the rendered
// ground-truth frames.
inline MetricsReport build_metrics_report(const GenerationResult& gen, const VideoTensor& reference,
                                          const ClipPlan& plan) {
    MetricsReport report;
    for (std::int64_t ci = 0; ci < plan.n_clips(); ++ci) {
        ClipRecord rec;
        rec.clip_index = ci;
        const std::int64_t start = plan.starts[static_cast<std::size_t>(ci)];
        const VideoTensor& clip = gen.trace.clips[static_cast<std::size_t>(ci)];
        double acc = 0.0;
        for (std::int64_t f = 0; f < clip.t; ++f) acc += ssim(clip.frame(f), reference.frame(start + f));
        rec.mean_ssim_to_reference = acc / static_cast<double>(clip.t);
        rec.noise_rmse_to_first = gen.trace.noise_rmse_to_first[static_cast<std::size_t>(ci)];
        report.per_clip.push_back(rec);
    }
    for (std::size_t bi = 0; bi < gen.trace.boundary_ssim.size(); ++bi) {
        BoundaryRecord rec;
        rec.boundary_index = static_cast<std::int64_t>(bi);
        rec.ssim_across_boundary = gen.trace.boundary_ssim[bi];
        report.per_boundary.push_back(rec);
    }
    double acc = 0.0;
    for (const auto& rec : report.per_clip) acc += rec.mean_ssim_to_reference;
    report.mean_ssim = report.per_clip.empty() ? 0.0 : acc / static_cast<double>(report.per_clip.size());
    report.flicker_value = flicker(gen.video);
    report.rmse_to_reference = video_rmse(gen.video, reference);
    return report;
}

}  // namespace lvgen
