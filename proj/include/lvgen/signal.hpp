// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "lvgen/common.hpp"
#include "lvgen/tensor.hpp"

namespace lvgen {

// Overlapping segmentation of a frame range into fixed-length clips.
struct ClipPlan {
    std::int64_t clip_len = 49;
    std::int64_t overlap = 1;
    std::vector<std::int64_t> starts;
    std::int64_t total_frames = 0;

    std::int64_t n_clips() const { return static_cast<std::int64_t>(starts.size()); }
};

inline ClipPlan plan_clips(std::int64_t total_frames, std::int64_t clip_len, std::int64_t overlap) {
    if (clip_len < 2) throw InvalidInput("plan_clips: clip_len must be >= 2");
    if (overlap < 0 || overlap >= clip_len) throw InvalidInput("plan_clips: need 0 <= overlap < clip_len");
    if (total_frames < clip_len) throw InvalidInput("plan_clips: total_frames < clip_len");
    const std::int64_t stride = clip_len - overlap;
    if ((total_frames - clip_len) % stride != 0)
        throw InvalidInput("plan_clips: length " + std::to_string(total_frames) +
                           " not coverable by clips of " + std::to_string(clip_len) +
                           " with overlap " + std::to_string(overlap));
    ClipPlan plan;
    plan.clip_len = clip_len;
    plan.overlap = overlap;
    plan.total_frames = total_frames;
    const std::int64_t n = (total_frames - clip_len) / stride + 1;
    plan.starts.reserve(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) plan.starts.push_back(i * stride);
    return plan;
}

// Nearest-rank percentile: 1-based index ceil(q * N) into the ascending sort.
inline double nearest_rank_percentile(std::vector<double> values, double q) {
    std::sort(values.begin(), values.end());
    const auto n = static_cast<double>(values.size());
    auto idx = static_cast<std::size_t>(std::ceil(q * n));
    if (idx < 1) idx = 1;
    if (idx > values.size()) idx = values.size();
    return values[idx - 1];
}

// Percentile-window rescale of the whole tensor: clamp to [p5, p95], map to
// [0, 1]. A constant (degenerate-range) input maps to all zeros.
inline VideoTensor global_normalize(const VideoTensor& video) {
    if (video.data.empty()) throw InvalidInput("global_normalize: empty video");
    if (!video.all_finite()) throw InvalidInput("global_normalize: non-finite value");
    const double p5 = nearest_rank_percentile(video.data, 0.05);
    const double p95 = nearest_rank_percentile(video.data, 0.95);
    VideoTensor out = video;
    if (p95 == p5) {
        std::fill(out.data.begin(), out.data.end(), 0.0);
        return out;
    }
    const double range = p95 - p5;
    for (double& v : out.data) {
        double x = std::clamp(v, p5, p95);
        v = (x - p5) / range;
    }
    return out;
}

// Clip-wise normalization baseline: each window rescaled on its own.
// Overlap frames take the value from the later clip.
inline VideoTensor per_clip_normalize(const VideoTensor& video, const ClipPlan& plan) {
    if (plan.total_frames != video.t)
        throw InvalidInput("per_clip_normalize: plan does not match video length");
    VideoTensor out(video.t, video.c, video.h, video.w);
    const std::size_t stride = static_cast<std::size_t>(video.c * video.h * video.w);
    for (std::int64_t start : plan.starts) {
        VideoTensor norm = global_normalize(video.window(start, plan.clip_len));
        std::copy(norm.data.begin(), norm.data.end(),
                  out.data.begin() + static_cast<std::ptrdiff_t>(start) * static_cast<std::ptrdiff_t>(stride));
    }
    return out;
}

// Uniform keypoint grid with half-cell offsets, row-major. The grid factors
// k = rows * cols so that rows/cols is closest to h/w; ties go to more rows.
inline std::pair<std::int64_t, std::int64_t> keypoint_grid(std::int64_t h, std::int64_t w, std::int64_t k) {
    const double aspect = static_cast<double>(h) / static_cast<double>(w);
    std::int64_t best_r = -1, best_c = -1;
    double best = 0.0;
    for (std::int64_t r = 1; r <= k; ++r) {
        if (k % r != 0) continue;
        const std::int64_t c = k / r;
        const double d = std::abs(static_cast<double>(r) / static_cast<double>(c) - aspect);
        if (best_r < 0 || d < best || (d == best && r > best_r)) {
            best = d;
            best_r = r;
            best_c = c;
        }
    }
    return {best_r, best_c};
}

inline std::vector<std::pair<double, double>> sample_keypoints(std::int64_t height, std::int64_t width,
                                                               std::int64_t k) {
    if (k < 1) throw InvalidInput("sample_keypoints: k must be >= 1");
    if (k > height * width) throw InvalidInput("sample_keypoints: k exceeds pixel count");
    const auto [rows, cols] = keypoint_grid(height, width, k);
    std::vector<std::pair<double, double>> points;
    points.reserve(static_cast<std::size_t>(k));
    for (std::int64_t i = 0; i < rows; ++i)
        for (std::int64_t j = 0; j < cols; ++j)
            points.emplace_back((static_cast<double>(j) + 0.5) * static_cast<double>(width) / static_cast<double>(cols),
                                (static_cast<double>(i) + 0.5) * static_cast<double>(height) / static_cast<double>(rows));
    return points;
}

// One tracked point over a clip. Positions are kept even after the point
// leaves the frame; in_view flags which entries are usable.
struct KeypointTrack {
    std::int64_t point_id = 0;
    std::vector<std::int64_t> frames;  // absolute frame indices
    std::vector<double> xs;
    std::vector<double> ys;
    std::vector<double> depth_values;  // normalized depth at each position
    std::vector<bool> in_view;
};

// Per-frame displacement of the scene point under pixel (x, y) at frame t.
using MotionField = std::function<std::pair<double, double>(std::int64_t t, double x, double y)>;

// Advect grid points through the motion field across [t0, t0+len), reading
// depth from the normalized depth video with nearest-pixel sampling.
inline std::vector<KeypointTrack> track_keypoints(const MotionField& motion,
                                                  const VideoTensor& norm_depth,
                                                  const std::vector<std::pair<double, double>>& points,
                                                  std::int64_t t0, std::int64_t len) {
    if (t0 < 0 || len < 1 || t0 + len > norm_depth.t)
        throw InvalidInput("track_keypoints: clip window out of range");
    std::vector<KeypointTrack> tracks;
    tracks.reserve(points.size());
    for (std::size_t pi = 0; pi < points.size(); ++pi) {
        KeypointTrack tr;
        tr.point_id = static_cast<std::int64_t>(pi);
        double x = points[pi].first;
        double y = points[pi].second;
        bool exited = false;
        for (std::int64_t f = 0; f < len; ++f) {
            const std::int64_t t = t0 + f;
            const auto px = static_cast<std::int64_t>(std::llround(x));
            const auto py = static_cast<std::int64_t>(std::llround(y));
            const bool inside = px >= 0 && px < norm_depth.w && py >= 0 && py < norm_depth.h;
            if (!inside) exited = true;  // flagged from the first exterior frame onward
            tr.frames.push_back(t);
            tr.xs.push_back(x);
            tr.ys.push_back(y);
            tr.in_view.push_back(!exited);
            tr.depth_values.push_back(!exited ? norm_depth.at(t, 0, py, px) : 0.0);
            const auto [dx, dy] = motion(t, x, y);
            x += dx;
            y += dy;
        }
        tracks.push_back(std::move(tr));
    }
    return tracks;
}

// Rasterize tracks as a depth-colorized point-map video: one nearest pixel
// per in-view track per frame; later tracks overwrite earlier on collision.
inline VideoTensor render_point_map(const std::vector<KeypointTrack>& tracks, std::int64_t t_frames,
                                    std::int64_t h, std::int64_t w) {
    VideoTensor out(t_frames, 1, h, w);
    for (const KeypointTrack& tr : tracks) {
        for (std::size_t i = 0; i < tr.frames.size(); ++i) {
            if (!tr.in_view[i]) continue;
            const std::int64_t f = tr.frames[i] - tr.frames[0];
            if (f < 0 || f >= t_frames) continue;
            const auto px = static_cast<std::int64_t>(std::llround(tr.xs[i]));
            const auto py = static_cast<std::int64_t>(std::llround(tr.ys[i]));
            if (px < 0 || px >= w || py < 0 || py >= h)
                throw InvalidInput("render_point_map: in-view position out of bounds");
            out.at(f, 0, py, px) = tr.depth_values[i];
        }
    }
    return out;
}

// Dense control clip plus its aligned sparse point-map clip.
struct ControlPair {
    VideoTensor dense;
    VideoTensor sparse;

    void validate() const {
        if (dense.t != sparse.t || dense.h != sparse.h || dense.w != sparse.w)
            throw InvalidInput("ControlPair: dense/sparse T,H,W mismatch");
    }
};

}  // namespace lvgen
