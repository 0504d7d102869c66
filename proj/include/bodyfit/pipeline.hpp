#pragma once

// Requires linking libpng (PNG::PNG) for PNG target silhouettes.

#include "body_losses.hpp"
#include "config.hpp"
#include "image_io.hpp"
#include "obj_io.hpp"
#include "optimize.hpp"
#include "png_io.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <optional>
#include <string>

namespace bodyfit {

/// Reads a target silhouette, choosing the decoder by file extension (.png or PGM).
inline SilhouetteImage read_silhouette(const std::filesystem::path& path)
{
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".png" ? read_png(path) : read_pgm(path);
}

struct DeformOutputs {
    std::filesystem::path final_mesh;
    std::filesystem::path record;
    std::filesystem::path timings;
    std::optional<std::filesystem::path> penetration_map;
    std::filesystem::path summary;
    RunResult result;
    std::optional<BodyMetrics> metrics;
};

/// Runs a configured deformation and writes its outputs into cfg.output_dir.
inline DeformOutputs run_deform(const RunConfig& cfg, const std::function<void(const IterationRecord&)>& progress = {})
{
    const TriMesh tmpl = load_mesh(cfg.template_path);
    GuidanceTarget target;
    if (cfg.guidance_path) target.mesh = load_mesh(*cfg.guidance_path);
    target.sample_count = cfg.sample_count;
    target.policy = cfg.resample;
    target.seed = cfg.objective.seed;

    std::optional<BodySpec> body;
    if (cfg.body_path) body = load_body(cfg);

    RenderSettings render = cfg.render;
    const bool image_term = cfg.objective.lambda_semantic > 0 && cfg.objective.guidance.image > 0;
    if (image_term || cfg.write_silhouettes) render.cameras = config_cameras(cfg, tmpl, target.mesh);
    for (const auto& p : cfg.silhouette_paths) target.silhouettes.push_back(read_silhouette(p));
    if (!target.silhouettes.empty() && image_term && target.silhouettes.size() != render.cameras.size()) {
        throw PreconditionError(std::to_string(target.silhouettes.size()) + " target silhouettes given for " +
                                std::to_string(render.cameras.size()) + " cameras");
    }

    std::filesystem::create_directories(cfg.output_dir);
    RunOptions options;
    options.pin_vertex = cfg.pin_vertex;
    options.snapshot_dir = cfg.output_dir / "snapshots";
    options.on_iteration = progress;

    const BodySpec* body_ptr = body ? &*body : nullptr;
    DeformOutputs out;
    switch (cfg.mode) {
    case RunMode::Joint: out.result = run_optimization(tmpl, body_ptr, target, cfg.objective, render, options); break;
    case RunMode::TwoStage: out.result = run_two_stage(tmpl, body_ptr, target, cfg.objective, false, render, options); break;
    case RunMode::TwoStageFromGuidance:
        out.result = run_two_stage(tmpl, body_ptr, target, cfg.objective, true, render, options);
        break;
    }

    out.final_mesh = cfg.output_dir / "final.obj";
    write_mesh(out.result.vertices, out.result.faces, out.final_mesh);
    out.record = cfg.output_dir / "record.csv";
    write_text_file(out.record, format_record_csv(out.result.record));
    out.timings = cfg.output_dir / "timings.csv";
    write_text_file(out.timings, format_timings_csv(out.result.record));

    std::string summary = "mode," + to_string(cfg.mode) + "\niterations," + std::to_string(out.result.record.size()) +
                          "\npinned_vertex," + std::to_string(out.result.pinned_vertex) + "\n";
    if (body) {
        out.metrics = eval_metrics(out.result.vertices, *body);
        out.penetration_map = cfg.output_dir / "penetration_map.txt";
        write_penetration_map(out.metrics->signed_distances, *out.penetration_map);
        summary += "Dp,";
        append_number(summary, out.metrics->penetration_score);
        summary += "\nDc,";
        append_number(summary, out.metrics->contact_distance);
        summary += "\npenetrating_vertices," + std::to_string(out.metrics->penetrating_vertices) + "\nvertex_count," +
                   std::to_string(out.metrics->vertex_count) + "\n";
    }
    out.summary = cfg.output_dir / "summary.csv";
    write_text_file(out.summary, summary);

    if (cfg.write_silhouettes) {
        const auto dir = cfg.output_dir / "silhouettes";
        std::filesystem::create_directories(dir);
        for (std::size_t k = 0; k < render.cameras.size(); ++k) {
            const auto& cam = render.cameras[k];
            const auto img = render_silhouette(out.result.vertices, out.result.faces, cam, render.sigma_pixels * cam.pixel_size(),
                                               static_cast<int>(k));
            write_pgm(img, dir / ("final_view" + std::to_string(k) + ".pgm"));
        }
    }
    return out;
}

} // namespace bodyfit
