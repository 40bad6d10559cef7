// SPDX-License-Identifier: Apache-2.0
//
// Command-line driver: synthetic data generation, training, autoregressive
// inference, the ablation matrix, metric evaluation, and SVG plots.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lvgen/ablate.hpp"
#include "lvgen/config.hpp"
#include "lvgen/eval.hpp"
#include "lvgen/io.hpp"
#include "lvgen/model.hpp"
#include "lvgen/pipeline.hpp"
#include "lvgen/plot.hpp"
#include "lvgen/report.hpp"
#include "lvgen/synthdata.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
    std::uint64_t seed = 0;
    std::string config_path;
    std::string out_dir = ".";
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--seed", opts.seed, "Master seed for all randomness");
    cmd->add_option("--config", opts.config_path, "Pipeline configuration file");
    cmd->add_option("--out-dir", opts.out_dir, "Output directory");
}

lvgen::ConfigFile load_or_empty(const std::string& path) {
    if (path.empty()) return {};
    return lvgen::load_config(path);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw lvgen::FormatError("cannot write " + path.string());
    out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

int cmd_gen_data(const CommonOpts& opts) {
    const auto cfg = load_or_empty(opts.config_path);
    const auto scene_spec = lvgen::scene_spec_from_config(cfg);
    const auto pc = lvgen::pipeline_config_from_config(cfg, scene_spec);
    const auto dataset = lvgen::make_dataset(scene_spec.n_scenes, opts.seed, scene_spec.width, scene_spec.height,
                                             pc.clip_len, pc.clip_len, pc.overlap, pc.keypoints_per_clip);
    fs::create_directories(opts.out_dir);
    json manifest;
    manifest["seed"] = opts.seed;
    manifest["pairs"] = json::array();
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const std::string tag = std::to_string(i);
        const std::string clip = "clip_" + tag + ".lvtf";
        const std::string dense = "dense_" + tag + ".lvtf";
        const std::string sparse = "sparse_" + tag + ".lvtf";
        lvgen::write_lvtf((fs::path(opts.out_dir) / clip).string(), dataset[i].clip);
        lvgen::write_lvtf((fs::path(opts.out_dir) / dense).string(), dataset[i].control.dense);
        lvgen::write_lvtf((fs::path(opts.out_dir) / sparse).string(), dataset[i].control.sparse);
        manifest["pairs"].push_back({{"clip", clip}, {"dense", dense}, {"sparse", sparse}});
    }
    write_json(fs::path(opts.out_dir) / "manifest.json", manifest);
    std::cout << "wrote " << dataset.size() << " training pairs to " << opts.out_dir << "\n";
    return 0;
}

std::vector<lvgen::TrainingPair> read_dataset(const std::string& data_dir) {
    std::ifstream in(fs::path(data_dir) / "manifest.json");
    if (!in) throw lvgen::FormatError("cannot open " + data_dir + "/manifest.json");
    json manifest = json::parse(in);
    std::vector<lvgen::TrainingPair> dataset;
    for (const auto& entry : manifest.at("pairs")) {
        lvgen::TrainingPair pair;
        pair.clip = lvgen::read_lvtf((fs::path(data_dir) / entry.at("clip").get<std::string>()).string());
        pair.control.dense = lvgen::read_lvtf((fs::path(data_dir) / entry.at("dense").get<std::string>()).string());
        pair.control.sparse = lvgen::read_lvtf((fs::path(data_dir) / entry.at("sparse").get<std::string>()).string());
        dataset.push_back(std::move(pair));
    }
    return dataset;
}

int cmd_train(const CommonOpts& opts, const std::string& data_dir) {
    const auto cfg = load_or_empty(opts.config_path);
    const auto scene_spec = lvgen::scene_spec_from_config(cfg);
    auto pc = lvgen::pipeline_config_from_config(cfg, scene_spec);
    pc.seed = opts.seed;

    std::vector<lvgen::TrainingPair> dataset;
    if (!data_dir.empty()) {
        dataset = read_dataset(data_dir);
        if (!dataset.empty()) {
            pc.model.lat_h = dataset[0].clip.h / 2;
            pc.model.lat_w = dataset[0].clip.w / 2;
            pc.model.lat_c = dataset[0].clip.c;
        }
    } else {
        dataset = lvgen::make_dataset(scene_spec.n_scenes, opts.seed, scene_spec.width, scene_spec.height,
                                      pc.clip_len, pc.clip_len, pc.overlap, pc.keypoints_per_clip);
    }

    auto result = lvgen::train(pc, dataset);
    fs::create_directories(opts.out_dir);
    lvgen::save_checkpoint((fs::path(opts.out_dir) / "checkpoint.lvck").string(), result.model);
    std::string csv = "step,loss\n";
    for (std::size_t i = 0; i < result.losses.size(); ++i)
        csv += std::to_string(i) + "," + std::to_string(result.losses[i]) + "\n";
    write_text(fs::path(opts.out_dir) / "losses.csv", csv);
    std::cout << "trained " << result.losses.size() << " steps; checkpoint in " << opts.out_dir << "\n";
    return 0;
}

int cmd_infer(const CommonOpts& opts, const std::string& checkpoint, const std::string& depth_path) {
    const auto cfg = load_or_empty(opts.config_path);
    const auto scene_spec = lvgen::scene_spec_from_config(cfg);
    auto pc = lvgen::pipeline_config_from_config(cfg, scene_spec);
    pc.seed = opts.seed;
    pc.noise_plan.seed = opts.seed;

    const lvgen::SyntheticScene scene = lvgen::build_eval_scene(scene_spec, opts.seed);
    lvgen::RenderedScene rendered = lvgen::render_scene(scene);
    lvgen::VideoTensor depth = depth_path.empty() ? rendered.depth : lvgen::read_lvtf(depth_path);
    if (!depth_path.empty() && depth.t != rendered.depth.t)
        // External depth with a different length: the scene motion field is
        // only valid inside the rendered range, so re-render at that length.
        rendered = lvgen::render_scene([&] {
            lvgen::SyntheticScene s = scene;
            s.n_frames = depth.t;
            return s;
        }());
    pc.model.lat_h = depth.h / 2;
    pc.model.lat_w = depth.w / 2;

    lvgen::ControlDiT model =
        checkpoint.empty() ? lvgen::init_model(pc.model, opts.seed) : lvgen::load_checkpoint(checkpoint);
    if (!checkpoint.empty()) pc.model = model.config;
    pc.clip_len = pc.model.lat_t;

    const auto gen = lvgen::generate_long(model, depth, rendered, pc);
    fs::create_directories(opts.out_dir);
    lvgen::write_lvtf((fs::path(opts.out_dir) / "video.lvtf").string(), gen.video);
    lvgen::write_pgm((fs::path(opts.out_dir) / "frame_000.pgm").string(), gen.video, 0);

    json trace;
    trace["noise_rmse_to_first"] = gen.trace.noise_rmse_to_first;
    trace["boundary_ssim"] = gen.trace.boundary_ssim;
    trace["n_clips"] = gen.trace.clips.size();
    write_json(fs::path(opts.out_dir) / "trace.json", trace);

    const auto plan = lvgen::plan_clips(depth.t, pc.clip_len, pc.overlap);
    const auto report = lvgen::build_metrics_report(gen, rendered.frames, plan);
    write_json(fs::path(opts.out_dir) / "report.json", lvgen::metrics_report_to_json(report, pc));
    write_text(fs::path(opts.out_dir) / "report.csv", lvgen::metrics_report_to_csv(report));
    std::cout << "generated " << gen.video.t << " frames in " << gen.trace.clips.size() << " clips\n";
    return 0;
}

int cmd_ablate(const CommonOpts& opts) {
    const auto cfg = load_or_empty(opts.config_path);
    const auto scene_spec = lvgen::scene_spec_from_config(cfg);
    auto pc = lvgen::pipeline_config_from_config(cfg, scene_spec);
    const json report = lvgen::run_ablation(pc, scene_spec, opts.seed);
    fs::create_directories(opts.out_dir);
    write_json(fs::path(opts.out_dir) / "ablation.json", report);
    std::string csv;
    for (const auto& cell : report.at("cells"))
        csv += cell.at("normalization").get<std::string>() + "," + cell.at("noise_mode").get<std::string>() + "," +
               cell.at("degradation").get<std::string>() + "," +
               std::to_string(cell.at("report").at("global").at("mean_boundary_ssim").get<double>()) + "\n";
    write_text(fs::path(opts.out_dir) / "ablation_summary.csv",
               "normalization,noise_mode,degradation,mean_boundary_ssim\n" + csv);
    std::cout << "wrote ablation matrix (" << report.at("cells").size() << " cells) to " << opts.out_dir << "\n";
    return 0;
}

int cmd_eval(const CommonOpts& opts, const std::string& video_path, const std::string& ref_path,
             std::int64_t clip_len, std::int64_t overlap) {
    const lvgen::VideoTensor video = lvgen::read_lvtf(video_path);
    const auto plan = lvgen::plan_clips(video.t, clip_len, overlap);
    lvgen::MetricsReport report;
    const auto boundary = lvgen::boundary_consistency(video, plan);
    for (std::size_t bi = 0; bi < boundary.size(); ++bi)
        report.per_boundary.push_back({static_cast<std::int64_t>(bi), boundary[bi]});
    report.flicker_value = lvgen::flicker(video);
    if (!ref_path.empty()) {
        const lvgen::VideoTensor ref = lvgen::read_lvtf(ref_path);
        report.rmse_to_reference = lvgen::video_rmse(video, ref);
        for (std::int64_t ci = 0; ci < plan.n_clips(); ++ci) {
            lvgen::ClipRecord rec;
            rec.clip_index = ci;
            const std::int64_t start = plan.starts[static_cast<std::size_t>(ci)];
            double acc = 0.0;
            for (std::int64_t f = 0; f < clip_len; ++f)
                acc += lvgen::ssim(video.frame(start + f), ref.frame(start + f));
            rec.mean_ssim_to_reference = acc / static_cast<double>(clip_len);
            report.per_clip.push_back(rec);
        }
        double acc = 0.0;
        for (const auto& rec : report.per_clip) acc += rec.mean_ssim_to_reference;
        report.mean_ssim = acc / static_cast<double>(report.per_clip.size());
    }
    fs::create_directories(opts.out_dir);
    lvgen::PipelineConfig echo;
    echo.clip_len = clip_len;
    echo.overlap = overlap;
    echo.model.lat_t = clip_len;
    write_json(fs::path(opts.out_dir) / "metrics.json", lvgen::metrics_report_to_json(report, echo));
    write_text(fs::path(opts.out_dir) / "metrics.csv", lvgen::metrics_report_to_csv(report));
    std::cout << "evaluated " << video.t << " frames (" << plan.n_clips() << " clips)\n";
    return 0;
}

int cmd_plot(const CommonOpts& opts, const std::string& report_path) {
    std::ifstream in(report_path);
    if (!in) throw lvgen::FormatError("cannot open " + report_path);
    const json report = json::parse(in);
    fs::create_directories(opts.out_dir);
    write_text(fs::path(opts.out_dir) / "ssim_curves.svg", lvgen::plot_ssim_curves(report));
    write_text(fs::path(opts.out_dir) / "rmse_ssim_scatter.svg", lvgen::plot_rmse_ssim_scatter(report));
    std::cout << "wrote plots to " << opts.out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Controllable long-video generation testbed"};
    app.require_subcommand(1);

    CommonOpts gen_opts, train_opts, infer_opts, ablate_opts, eval_opts, plot_opts;
    std::string data_dir, checkpoint, depth_path, video_path, ref_path, report_path;
    std::int64_t eval_clip_len = 49, eval_overlap = 1;

    auto* gen = app.add_subcommand("gen-data", "Render a synthetic training corpus");
    add_common(gen, gen_opts);

    auto* tr = app.add_subcommand("train", "Fit the control branches");
    add_common(tr, train_opts);
    tr->add_option("--data-dir", data_dir, "Directory with manifest.json from gen-data");

    auto* inf = app.add_subcommand("infer", "Autoregressive long-video generation");
    add_common(inf, infer_opts);
    inf->add_option("--checkpoint", checkpoint, "LVCK checkpoint path");
    inf->add_option("--depth", depth_path, "External dense control video (LVTF)");

    auto* abl = app.add_subcommand("ablate", "Run the normalization x noise x degradation matrix");
    add_common(abl, ablate_opts);

    auto* ev = app.add_subcommand("eval", "Metrics on an existing generated video");
    add_common(ev, eval_opts);
    ev->add_option("--video", video_path, "Generated video (LVTF)")->required();
    ev->add_option("--ref", ref_path, "Reference video (LVTF)");
    ev->add_option("--clip-len", eval_clip_len, "Clip length used at generation time");
    ev->add_option("--overlap", eval_overlap, "Clip overlap used at generation time");

    auto* pl = app.add_subcommand("plot", "Render SVG plots from an ablation report");
    add_common(pl, plot_opts);
    pl->add_option("--report", report_path, "ablation.json path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (gen->parsed()) return cmd_gen_data(gen_opts);
        if (tr->parsed()) return cmd_train(train_opts, data_dir);
        if (inf->parsed()) return cmd_infer(infer_opts, checkpoint, depth_path);
        if (abl->parsed()) return cmd_ablate(ablate_opts);
        if (ev->parsed()) return cmd_eval(eval_opts, video_path, ref_path, eval_clip_len, eval_overlap);
        if (pl->parsed()) return cmd_plot(plot_opts, report_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
