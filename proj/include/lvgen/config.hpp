// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lvgen/common.hpp"
#include "lvgen/degrade.hpp"
#include "lvgen/noise.hpp"
#include "lvgen/pipeline.hpp"
#include "lvgen/synthdata.hpp"

namespace lvgen {

// Flat sectioned key=value text config. '#' starts a comment; keys may
// repeat (used for scene objects).
struct ConfigFile {
    std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> sections;

    const std::vector<std::pair<std::string, std::string>>* section(const std::string& name) const {
        for (const auto& [sname, entries] : sections)
            if (sname == name) return &entries;
        return nullptr;
    }
};

namespace detail {
inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}
}  // namespace detail

inline ConfigFile parse_config_text(const std::string& text) {
    ConfigFile cfg;
    std::istringstream in(text);
    std::string line;
    std::string current;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            current = detail::trim(line.substr(1, line.size() - 2));
            cfg.sections.emplace_back(current, std::vector<std::pair<std::string, std::string>>{});
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
        if (cfg.sections.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": key outside section");
        cfg.sections.back().second.emplace_back(detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    }
    return cfg;
}

inline ConfigFile load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config_text(text);
}

namespace detail {

inline std::int64_t to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const std::int64_t r = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": bad integer \"" + v + "\"");
    }
}

inline double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double r = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": bad number \"" + v + "\"");
    }
}

inline std::vector<std::string> split_commas(const std::string& v) {
    std::vector<std::string> out;
    std::istringstream in(v);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(trim(item));
    return out;
}

}  // namespace detail

// Scene geometry and corpus parameters shared by gen-data and infer.
struct SceneSpec {
    std::int64_t width = 16;
    std::int64_t height = 16;
    std::int64_t n_frames = 481;
    std::int64_t n_scenes = 4;  // training corpus size for gen-data
    double depth_drift_per_frame = 0.0;
    std::vector<SceneObject> objects;  // empty: random objects per scene
};

inline SceneSpec scene_spec_from_config(const ConfigFile& cfg) {
    SceneSpec spec;
    const auto* entries = cfg.section("scene");
    if (!entries) return spec;
    for (const auto& [key, value] : *entries) {
        if (key == "width") spec.width = detail::to_int(key, value);
        else if (key == "height") spec.height = detail::to_int(key, value);
        else if (key == "frames") spec.n_frames = detail::to_int(key, value);
        else if (key == "scenes") spec.n_scenes = detail::to_int(key, value);
        else if (key == "depth_drift_per_frame") spec.depth_drift_per_frame = detail::to_double(key, value);
        else if (key == "object") {
            // object = circle|rect, size, x0, y0, vx, vy, depth, intensity
            const auto parts = detail::split_commas(value);
            if (parts.size() != 8) throw ConfigError("scene object needs 8 comma-separated fields");
            SceneObject obj;
            if (parts[0] == "circle") obj.shape = ShapeKind::Circle;
            else if (parts[0] == "rect") obj.shape = ShapeKind::Rectangle;
            else throw ConfigError("scene object shape must be circle or rect");
            obj.size = detail::to_double(key, parts[1]);
            obj.x0 = detail::to_double(key, parts[2]);
            obj.y0 = detail::to_double(key, parts[3]);
            obj.vx = detail::to_double(key, parts[4]);
            obj.vy = detail::to_double(key, parts[5]);
            obj.depth = detail::to_double(key, parts[6]);
            obj.intensity = detail::to_double(key, parts[7]);
            spec.objects.push_back(obj);
        } else {
            throw ConfigError("unknown [scene] key \"" + key + "\"");
        }
    }
    return spec;
}

// Pipeline configuration with every default equal to the reference choice
// where one exists (49/1 clips, 0.15/0.10 probabilities, n = 5, [0.05, 1]).
inline PipelineConfig pipeline_config_from_config(const ConfigFile& cfg, const SceneSpec& scene) {
    PipelineConfig pc;
    pc.model.lat_h = scene.height / 2;
    pc.model.lat_w = scene.width / 2;
    if (const auto* entries = cfg.section("pipeline")) {
        for (const auto& [key, value] : *entries) {
            if (key == "clip_len") pc.clip_len = detail::to_int(key, value);
            else if (key == "overlap") pc.overlap = detail::to_int(key, value);
            else if (key == "normalization") {
                if (value == "global") pc.normalization = NormalizationMode::Global;
                else if (value == "per_clip") pc.normalization = NormalizationMode::PerClip;
                else throw ConfigError("normalization must be global or per_clip");
            } else if (key == "train_steps") pc.train_steps = detail::to_int(key, value);
            else if (key == "batch_size") pc.batch_size = detail::to_int(key, value);
            else if (key == "learning_rate") pc.learning_rate = detail::to_double(key, value);
            else if (key == "keypoints_per_clip") pc.keypoints_per_clip = detail::to_int(key, value);
            else throw ConfigError("unknown [pipeline] key \"" + key + "\"");
        }
    }
    if (const auto* entries = cfg.section("model")) {
        for (const auto& [key, value] : *entries) {
            if (key == "token_dim") pc.model.token_dim = detail::to_int(key, value);
            else if (key == "n_base_blocks") pc.model.n_base_blocks = detail::to_int(key, value);
            else if (key == "n_control_blocks") pc.model.n_control_blocks = detail::to_int(key, value);
            else if (key == "n_heads") pc.model.n_heads = detail::to_int(key, value);
            else if (key == "patch") pc.model.patch = detail::to_int(key, value);
            else if (key == "timesteps") pc.model.timesteps = detail::to_int(key, value);
            else if (key == "init_gain") pc.model.init_gain = detail::to_double(key, value);
            else throw ConfigError("unknown [model] key \"" + key + "\"");
        }
    }
    if (const auto* entries = cfg.section("noise")) {
        for (const auto& [key, value] : *entries) {
            if (key == "mode") {
                if (value == "unified") pc.noise_plan.mode = NoiseMode::Unified;
                else if (value == "per_clip") pc.noise_plan.mode = NoiseMode::PerClip;
                else if (value == "perturbed") pc.noise_plan.mode = NoiseMode::Perturbed;
                else throw ConfigError("noise mode must be unified, per_clip, or perturbed");
            } else if (key == "perturb_alpha") pc.noise_plan.perturb_alpha = detail::to_double(key, value);
            else throw ConfigError("unknown [noise] key \"" + key + "\"");
        }
    }
    if (const auto* entries = cfg.section("degrade")) {
        for (const auto& [key, value] : *entries) {
            if (key == "feature_prob") pc.degrade.feature_prob = detail::to_double(key, value);
            else if (key == "data_prob") pc.degrade.data_prob = detail::to_double(key, value);
            else if (key == "scale_lo") pc.degrade.scale_lo = detail::to_double(key, value);
            else if (key == "scale_hi") pc.degrade.scale_hi = detail::to_double(key, value);
            else if (key == "n_scales") pc.degrade.n_scales = detail::to_int(key, value);
            else if (key == "warmup_steps") pc.degrade.warmup_steps = detail::to_int(key, value);
            else if (key == "blur_kernels") {
                pc.degrade.blur_kernels.clear();
                for (const auto& part : detail::split_commas(value))
                    pc.degrade.blur_kernels.push_back(detail::to_int(key, part));
            } else throw ConfigError("unknown [degrade] key \"" + key + "\"");
        }
    }
    pc.model.lat_t = pc.clip_len;
    return pc;
}

}  // namespace lvgen
