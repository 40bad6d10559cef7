// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "lvgen/common.hpp"

namespace lvgen {

namespace detail {

struct Series {
    std::string label;
    std::vector<double> xs;
    std::vector<double> ys;
};

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

inline const char* series_color(std::size_t i) {
    static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
                                   "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#aec7e8", "#ffbb78"};
    return colors[i % (sizeof(colors) / sizeof(colors[0]))];
}

// Minimal line/scatter chart as raw SVG markup.
inline std::string render_chart(const std::vector<Series>& series, const std::string& title,
                                const std::string& x_label, const std::string& y_label, bool scatter) {
    constexpr double kW = 640, kH = 400, kMargin = 60;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.xs.size(); ++i) {
            xmin = std::min(xmin, s.xs[i]);
            xmax = std::max(xmax, s.xs[i]);
            ymin = std::min(ymin, s.ys[i]);
            ymax = std::max(ymax, s.ys[i]);
        }
    if (xmin > xmax) {
        xmin = 0;
        xmax = 1;
        ymin = 0;
        ymax = 1;
    }
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    auto sx = [&](double x) { return kMargin + (x - xmin) / (xmax - xmin) * (kW - 2 * kMargin); };
    auto sy = [&](double y) { return kH - kMargin - (y - ymin) / (ymax - ymin) * (kH - 2 * kMargin); };

    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kW) + "\" height=\"" + fmt(kH) +
                      "\" viewBox=\"0 0 " + fmt(kW) + " " + fmt(kH) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + fmt(kW / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" + title + "</text>\n";
    // axes
    svg += "<path d=\"M " + fmt(kMargin) + " " + fmt(kMargin) + " L " + fmt(kMargin) + " " + fmt(kH - kMargin) +
           " L " + fmt(kW - kMargin) + " " + fmt(kH - kMargin) + "\" stroke=\"black\" fill=\"none\"/>\n";
    svg += "<text x=\"" + fmt(kW / 2) + "\" y=\"" + fmt(kH - 16) + "\" text-anchor=\"middle\" font-size=\"12\">" +
           x_label + "</text>\n";
    svg += "<text x=\"16\" y=\"" + fmt(kH / 2) + "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 " +
           fmt(kH / 2) + ")\">" + y_label + "</text>\n";
    for (double f : {0.0, 0.5, 1.0}) {
        svg += "<text x=\"" + fmt(kMargin - 6) + "\" y=\"" + fmt(sy(ymin + f * (ymax - ymin)) + 4) +
               "\" text-anchor=\"end\" font-size=\"10\">" + fmt(ymin + f * (ymax - ymin)) + "</text>\n";
        svg += "<text x=\"" + fmt(sx(xmin + f * (xmax - xmin))) + "\" y=\"" + fmt(kH - kMargin + 16) +
               "\" text-anchor=\"middle\" font-size=\"10\">" + fmt(xmin + f * (xmax - xmin)) + "</text>\n";
    }
    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* color = series_color(si);
        if (scatter) {
            for (std::size_t i = 0; i < s.xs.size(); ++i)
                svg += "<circle cx=\"" + fmt(sx(s.xs[i])) + "\" cy=\"" + fmt(sy(s.ys[i])) +
                       "\" r=\"3\" fill=\"" + color + "\"/>\n";
        } else if (!s.xs.empty()) {
            std::string d = "M";
            for (std::size_t i = 0; i < s.xs.size(); ++i)
                d += " " + fmt(sx(s.xs[i])) + " " + fmt(sy(s.ys[i]));
            svg += "<path d=\"" + d + "\" stroke=\"" + color + "\" fill=\"none\" stroke-width=\"1.5\"/>\n";
        }
        svg += "<text x=\"" + fmt(kW - kMargin + 4) + "\" y=\"" + fmt(kMargin + 14 * static_cast<double>(si)) +
               "\" font-size=\"10\" fill=\"" + std::string(color) + "\">" + s.label + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace detail

// SSIM-vs-clip-index curves, one per ablation cell.
inline std::string plot_ssim_curves(const nlohmann::json& ablation_report) {
    std::vector<detail::Series> series;
    for (const auto& cell : ablation_report.at("cells")) {
        detail::Series s;
        s.label = cell.at("normalization").get<std::string>() + "/" + cell.at("noise_mode").get<std::string>() +
                  "/deg-" + cell.at("degradation").get<std::string>();
        for (const auto& rec : cell.at("report").at("per_clip")) {
            s.xs.push_back(rec.at("clip_index").get<double>());
            s.ys.push_back(rec.at("mean_ssim_to_reference").get<double>());
        }
        series.push_back(std::move(s));
    }
    return detail::render_chart(series, "Per-clip SSIM", "clip index", "mean SSIM", false);
}

// Noise-RMSE vs per-clip SSIM scatter across all cells.
inline std::string plot_rmse_ssim_scatter(const nlohmann::json& ablation_report) {
    std::vector<detail::Series> series;
    for (const auto& cell : ablation_report.at("cells")) {
        detail::Series s;
        s.label = cell.at("noise_mode").get<std::string>() + "/deg-" + cell.at("degradation").get<std::string>();
        for (const auto& rec : cell.at("report").at("per_clip")) {
            s.xs.push_back(rec.at("noise_rmse_to_first").get<double>());
            s.ys.push_back(rec.at("mean_ssim_to_reference").get<double>());
        }
        series.push_back(std::move(s));
    }
    return detail::render_chart(series, "Noise RMSE vs SSIM", "noise RMSE to first clip", "mean SSIM", true);
}

}  // namespace lvgen
