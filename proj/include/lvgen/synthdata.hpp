// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lvgen/common.hpp"
#include "lvgen/rng.hpp"
#include "lvgen/signal.hpp"
#include "lvgen/tensor.hpp"

namespace lvgen {

enum class ShapeKind { Circle, Rectangle };

struct SceneObject {
    ShapeKind shape = ShapeKind::Circle;
    double size = 4.0;  // radius for circles, full side for rectangles
    double x0 = 0.0, y0 = 0.0;
    double vx = 0.0, vy = 0.0;  // px/frame, integer-valued by default
    double depth = 0.5;
    double intensity = 1.0;

    double x_at(std::int64_t t) const { return x0 + static_cast<double>(t) * vx; }
    double y_at(std::int64_t t) const { return y0 + static_cast<double>(t) * vy; }

    bool covers(std::int64_t t, double px, double py) const {
        const double dx = px - x_at(t);
        const double dy = py - y_at(t);
        if (shape == ShapeKind::Circle) return dx * dx + dy * dy <= size * size;
        return std::abs(dx) <= size / 2.0 && std::abs(dy) <= size / 2.0;
    }
};

// Analytic scene: static depth-gradient background plus linearly moving
// shapes, with an optional per-frame depth drift to stress normalization.
struct SyntheticScene {
    std::int64_t width = 16;
    std::int64_t height = 16;
    std::int64_t n_frames = 49;
    double bg_depth_base = 2.0;
    double bg_depth_slope_x = 1.0;  // added across the full width
    double bg_depth_slope_y = 0.5;
    double bg_intensity = 0.1;
    std::vector<SceneObject> objects;
    double depth_drift_per_frame = 0.0;

    double background_depth(double px, double py) const {
        return bg_depth_base + bg_depth_slope_x * px / static_cast<double>(width - 1) +
               bg_depth_slope_y * py / static_cast<double>(height - 1);
    }

    // Index of the nearest (minimum-depth) object covering the pixel, -1 for
    // background.
    std::int64_t visible_object(std::int64_t t, double px, double py) const {
        std::int64_t best = -1;
        double best_depth = background_depth(px, py);
        for (std::size_t i = 0; i < objects.size(); ++i) {
            if (objects[i].covers(t, px, py) && objects[i].depth < best_depth) {
                best_depth = objects[i].depth;
                best = static_cast<std::int64_t>(i);
            }
        }
        return best;
    }
};

struct RenderedScene {
    VideoTensor frames;  // intensity video
    VideoTensor depth;   // exact analytic depth (with drift)
    MotionField motion;  // displacement of the visible surface under a pixel
};

inline RenderedScene render_scene(const SyntheticScene& scene) {
    if (scene.width < 2 || scene.height < 2 || scene.n_frames < 1)
        throw InvalidInput("render_scene: degenerate scene dims");
    RenderedScene out;
    out.frames = VideoTensor(scene.n_frames, 1, scene.height, scene.width);
    out.depth = VideoTensor(scene.n_frames, 1, scene.height, scene.width);
    for (std::int64_t t = 0; t < scene.n_frames; ++t) {
        const double drift = scene.depth_drift_per_frame * static_cast<double>(t);
        for (std::int64_t y = 0; y < scene.height; ++y)
            for (std::int64_t x = 0; x < scene.width; ++x) {
                const auto px = static_cast<double>(x);
                const auto py = static_cast<double>(y);
                const std::int64_t oi = scene.visible_object(t, px, py);
                if (oi >= 0) {
                    const SceneObject& obj = scene.objects[static_cast<std::size_t>(oi)];
                    out.frames.at(t, 0, y, x) = obj.intensity;
                    out.depth.at(t, 0, y, x) = obj.depth + drift;
                } else {
                    out.frames.at(t, 0, y, x) = scene.bg_intensity;
                    out.depth.at(t, 0, y, x) = scene.background_depth(px, py) + drift;
                }
            }
    }
    SyntheticScene copy = scene;
    out.motion = [copy](std::int64_t t, double x, double y) -> std::pair<double, double> {
        const std::int64_t oi = copy.visible_object(t, x, y);
        if (oi < 0) return {0.0, 0.0};
        const SceneObject& obj = copy.objects[static_cast<std::size_t>(oi)];
        return {obj.vx, obj.vy};
    };
    return out;
}

// Seeded random scene within the given frame geometry.
inline SyntheticScene random_scene(std::int64_t width, std::int64_t height, std::int64_t n_frames, Rng& rng) {
    SyntheticScene scene;
    scene.width = width;
    scene.height = height;
    scene.n_frames = n_frames;
    scene.bg_depth_base = rng.uniform(1.5, 3.0);
    scene.bg_depth_slope_x = rng.uniform(0.5, 1.5);
    scene.bg_depth_slope_y = rng.uniform(0.2, 1.0);
    const std::int64_t n_obj = 1 + static_cast<std::int64_t>(rng.uniform_int(3));
    for (std::int64_t i = 0; i < n_obj; ++i) {
        SceneObject obj;
        obj.shape = rng.uniform_int(2) == 0 ? ShapeKind::Circle : ShapeKind::Rectangle;
        obj.size = rng.uniform(static_cast<double>(std::min(width, height)) / 8.0,
                               static_cast<double>(std::min(width, height)) / 4.0);
        obj.x0 = rng.uniform(0.2, 0.8) * static_cast<double>(width);
        obj.y0 = rng.uniform(0.2, 0.8) * static_cast<double>(height);
        obj.vx = static_cast<double>(static_cast<std::int64_t>(rng.uniform_int(3)) - 1);
        obj.vy = static_cast<double>(static_cast<std::int64_t>(rng.uniform_int(3)) - 1);
        obj.depth = rng.uniform(0.3, 1.2);
        obj.intensity = rng.uniform(0.5, 1.0);
        scene.objects.push_back(obj);
    }
    return scene;
}

struct TrainingPair {
    VideoTensor clip;  // pixel frames of one clip
    ControlPair control;
};

// Seeded synthetic training corpus: per scene, normalized depth plus tracked
// point maps for every clip window.
inline std::vector<TrainingPair> make_dataset(std::int64_t n_scenes, std::uint64_t seed, std::int64_t width,
                                              std::int64_t height, std::int64_t frames_per_scene,
                                              std::int64_t clip_len, std::int64_t overlap,
                                              std::int64_t keypoints_per_clip) {
    std::vector<TrainingPair> pairs;
    for (std::int64_t si = 0; si < n_scenes; ++si) {
        Rng rng(stream_key(seed, 0x7363656E65000000ULL, static_cast<std::uint64_t>(si)));
        const SyntheticScene scene = random_scene(width, height, frames_per_scene, rng);
        const RenderedScene rendered = render_scene(scene);
        const VideoTensor norm_depth = global_normalize(rendered.depth);
        const ClipPlan plan = plan_clips(frames_per_scene, clip_len, overlap);
        for (std::int64_t start : plan.starts) {
            TrainingPair pair;
            pair.clip = rendered.frames.window(start, clip_len);
            pair.control.dense = norm_depth.window(start, clip_len);
            const auto points = sample_keypoints(height, width, keypoints_per_clip);
            const auto tracks = track_keypoints(rendered.motion, norm_depth, points, start, clip_len);
            pair.control.sparse = render_point_map(tracks, clip_len, height, width);
            pairs.push_back(std::move(pair));
        }
    }
    return pairs;
}

}  // namespace lvgen
