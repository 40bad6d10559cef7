// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "lvgen/common.hpp"

namespace lvgen {

// Dense time-major [T, C, H, W] tensor. Carries pixel videos, depth maps,
// point maps and latents alike.
struct VideoTensor {
    std::int64_t t = 0;
    std::int64_t c = 0;
    std::int64_t h = 0;
    std::int64_t w = 0;
    std::vector<double> data;

    VideoTensor() = default;
    VideoTensor(std::int64_t t_, std::int64_t c_, std::int64_t h_, std::int64_t w_)
        : t(t_), c(c_), h(h_), w(w_), data(static_cast<std::size_t>(t_ * c_ * h_ * w_), 0.0) {
        if (t_ < 1 || c_ < 1 || h_ < 1 || w_ < 1)
            throw InvalidInput("VideoTensor: all dims must be >= 1");
    }

    std::size_t size() const { return data.size(); }

    double& at(std::int64_t ti, std::int64_t ci, std::int64_t yi, std::int64_t xi) {
        return data[static_cast<std::size_t>(((ti * c + ci) * h + yi) * w + xi)];
    }
    double at(std::int64_t ti, std::int64_t ci, std::int64_t yi, std::int64_t xi) const {
        return data[static_cast<std::size_t>(((ti * c + ci) * h + yi) * w + xi)];
    }

    bool same_shape(const VideoTensor& o) const {
        return t == o.t && c == o.c && h == o.h && w == o.w;
    }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    // Frames [t0, t0+len) as a new tensor.
    VideoTensor window(std::int64_t t0, std::int64_t len) const {
        if (t0 < 0 || len < 1 || t0 + len > t) throw InvalidInput("VideoTensor::window out of range");
        VideoTensor out(len, c, h, w);
        const std::size_t stride = static_cast<std::size_t>(c * h * w);
        std::copy(data.begin() + static_cast<std::ptrdiff_t>(t0) * static_cast<std::ptrdiff_t>(stride),
                  data.begin() + static_cast<std::ptrdiff_t>(t0 + len) * static_cast<std::ptrdiff_t>(stride),
                  out.data.begin());
        return out;
    }

    VideoTensor frame(std::int64_t ti) const { return window(ti, 1); }
};

inline void require_same_shape(const VideoTensor& a, const VideoTensor& b, const char* who) {
    if (!a.same_shape(b)) throw InvalidInput(std::string(who) + ": shape mismatch");
}

}  // namespace lvgen
