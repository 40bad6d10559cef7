// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "lvgen/config.hpp"
#include "lvgen/pipeline.hpp"
#include "lvgen/report.hpp"
#include "lvgen/synthdata.hpp"

namespace lvgen {

// Evaluation scene for a spec: fixed objects if given, otherwise a seeded
// random scene, at the requested length and drift.
inline SyntheticScene build_eval_scene(const SceneSpec& spec, std::uint64_t seed) {
    SyntheticScene scene;
    if (spec.objects.empty()) {
        Rng rng(stream_key(seed, 0x6576616C00000000ULL, 0));
        scene = random_scene(spec.width, spec.height, spec.n_frames, rng);
    } else {
        scene.width = spec.width;
        scene.height = spec.height;
        scene.n_frames = spec.n_frames;
        scene.objects = spec.objects;
    }
    scene.depth_drift_per_frame = spec.depth_drift_per_frame;
    return scene;
}

// Full ablation matrix: {global, per_clip} x {unified, per_clip, perturbed}
// x {degradation on, off}; one metrics report per cell. Deterministic in
// (config, seed).
inline nlohmann::json run_ablation(const PipelineConfig& base_config, const SceneSpec& scene_spec,
                                   std::uint64_t seed) {
    PipelineConfig config = base_config;
    config.seed = seed;
    config.validate();

    const auto dataset =
        make_dataset(scene_spec.n_scenes, seed, scene_spec.width, scene_spec.height, config.clip_len,
                     config.clip_len, config.overlap, config.keypoints_per_clip);

    PipelineConfig no_degrade = config;
    no_degrade.degrade.feature_prob = 0.0;
    no_degrade.degrade.data_prob = 0.0;
    const TrainResult trained_on = train(config, dataset);
    const TrainResult trained_off = train(no_degrade, dataset);

    const SyntheticScene scene = build_eval_scene(scene_spec, seed);
    const RenderedScene rendered = render_scene(scene);
    const ClipPlan plan = plan_clips(rendered.depth.t, config.clip_len, config.overlap);

    nlohmann::json out;
    out["seed"] = seed;
    out["cells"] = nlohmann::json::array();
    for (const bool degrade_on : {true, false}) {
        const ControlDiT& model = degrade_on ? trained_on.model : trained_off.model;
        for (const NormalizationMode norm : {NormalizationMode::Global, NormalizationMode::PerClip}) {
            for (const NoiseMode noise_mode : {NoiseMode::Unified, NoiseMode::PerClip, NoiseMode::Perturbed}) {
                PipelineConfig cell_config = degrade_on ? config : no_degrade;
                cell_config.normalization = norm;
                cell_config.noise_plan.mode = noise_mode;
                cell_config.noise_plan.seed = seed;
                if (noise_mode == NoiseMode::Perturbed && cell_config.noise_plan.perturb_alpha == 0.0)
                    cell_config.noise_plan.perturb_alpha = 0.5;
                const GenerationResult gen = generate_long(model, rendered.depth, rendered, cell_config);
                const MetricsReport report = build_metrics_report(gen, rendered.frames, plan);
                nlohmann::json cell;
                cell["degradation"] = degrade_on ? "on" : "off";
                cell["normalization"] = normalization_name(norm);
                cell["noise_mode"] = noise_mode_name(noise_mode);
                cell["report"] = metrics_report_to_json(report, cell_config);
                out["cells"].push_back(cell);
            }
        }
    }
    return out;
}

}  // namespace lvgen
