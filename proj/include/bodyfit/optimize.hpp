#pragma once

#include "adam.hpp"
#include "body.hpp"
#include "camera.hpp"
#include "errors.hpp"
#include "guidance.hpp"
#include "io_util.hpp"
#include "jacobian_field.hpp"
#include "obj_io.hpp"
#include "objective.hpp"
#include "poisson.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace bodyfit {

/// Logged quantities of one iteration, evaluated at the field before that iteration's update.
/// Loss terms are weighted and sum to `total`.
struct IterationRecord {
    int iteration = 0;
    int stage = 1;
    double total = 0.0;
    double semantic = 0.0;
    double contact = 0.0;
    double penetration = 0.0;
    double regularizer = 0.0;
    double penetration_score = 0.0;  // Dp
    double contact_distance = 0.0;   // Dc
    double wall_ms = 0.0;
};

struct RunRecord {
    std::vector<IterationRecord> iterations;
    std::vector<std::filesystem::path> snapshots;

    std::size_t size() const noexcept { return iterations.size(); }
};

/// CSV with a fixed column order, one row per iteration. Wall-clock time is left out so
/// that equal runs produce equal bytes; see format_timings_csv.
inline std::string format_record_csv(const RunRecord& record)
{
    std::string out = "iteration,stage,total,semantic,contact,penetration,regularizer,Dp,Dc\n";
    for (const auto& r : record.iterations) {
        out += std::to_string(r.iteration) + ',' + std::to_string(r.stage);
        for (double v : {r.total, r.semantic, r.contact, r.penetration, r.regularizer, r.penetration_score, r.contact_distance}) {
            out += ',';
            append_number(out, v);
        }
        out += '\n';
    }
    return out;
}

inline std::string format_timings_csv(const RunRecord& record)
{
    std::string out = "iteration,stage,wall_ms\n";
    for (const auto& r : record.iterations) {
        out += std::to_string(r.iteration) + ',' + std::to_string(r.stage) + ',';
        append_number(out, r.wall_ms);
        out += '\n';
    }
    return out;
}

struct RenderSettings {
    CameraSet cameras;          // empty: eight default views framing template and guidance
    int resolution = 64;
    double sigma_pixels = 0.5;  // rasterizer softness
};

struct RunOptions {
    Eigen::Index pin_vertex = -1;  // -1: vertex nearest the contact centroid
    std::optional<std::filesystem::path> snapshot_dir;
    std::string snapshot_prefix = "snapshot";
    int stage = 1;
    std::function<void(const IterationRecord&)> on_iteration;
};

struct RunResult {
    Points vertices = Points(0, 3);
    Faces faces = Faces(0, 3);
    JacobianField field;
    RunRecord record;
    Eigen::Index pinned_vertex = 0;
};

/// Pin vertex used when none is configured: nearest to the contact centroid, or to the
/// template's vertex centroid when there are no contacts.
inline Eigen::Index choose_pin_vertex(const TriMesh& mesh, const BodySpec* body)
{
    if (body != nullptr && body->contacts.rows() > 0) {
        return nearest_vertex(mesh.vertices(), body->contacts.colwise().mean().transpose());
    }
    return nearest_vertex(mesh.vertices(), mesh.vertices().colwise().mean().transpose());
}

inline CameraSet resolve_cameras(const RenderSettings& render, const TriMesh& tmpl, const GuidanceTarget& target)
{
    if (!render.cameras.empty()) return render.cameras;
    std::vector<const Points*> framed{&tmpl.vertices()};
    if (target.mesh) framed.push_back(&target.mesh->vertices());
    return make_cameras(framed, render.resolution);
}

/// Optimizes the per-face Jacobian field of `tmpl` from identity: each iteration solves for
/// vertices, evaluates the objective, pulls its gradient back to the field and takes one
/// Adam step. Output connectivity equals the template's.
inline RunResult run_optimization(const TriMesh& tmpl, const BodySpec* body, const GuidanceTarget& target,
                                  const ObjectiveConfig& cfg, const RenderSettings& render = {}, const RunOptions& options = {})
{
    cfg.validate();
    if (tmpl.empty()) throw PreconditionError("template mesh has no faces");

    const Eigen::Index pin = options.pin_vertex >= 0 ? options.pin_vertex : choose_pin_vertex(tmpl, body);
    const PoissonSystem system(tmpl, build_gradient_operator(tmpl), pin);

    GuidanceLoss guidance;
    if (cfg.lambda_semantic > 0) {
        const bool needs_cameras = cfg.guidance.image > 0;
        const CameraSet cameras = needs_cameras ? resolve_cameras(render, tmpl, target) : CameraSet{};
        guidance = make_guidance_loss(target, cfg.guidance, tmpl, cameras, render.sigma_pixels);
        if (guidance.empty()) throw PreconditionError("semantic weight > 0 but no guidance term is active");
    }

    RunResult result;
    result.faces = tmpl.faces();
    result.pinned_vertex = pin;
    result.field = init_identity_field(tmpl);
    AdamState adam;

    if (options.snapshot_dir && cfg.snapshot_every > 0) std::filesystem::create_directories(*options.snapshot_dir);

    for (int it = 1; it <= cfg.iterations; ++it) {
        const auto start = std::chrono::steady_clock::now();
        const DeformationState state = solve_deformation(system, result.field);
        const ObjectiveValue value = total_loss_and_grad(state, body, guidance, cfg, it);

        IterationRecord rec;
        rec.iteration = it;
        rec.stage = options.stage;
        rec.total = value.total;
        rec.semantic = value.semantic;
        rec.contact = value.contact;
        rec.penetration = value.penetration;
        rec.regularizer = value.regularizer;
        rec.penetration_score = value.penetration_score;
        rec.contact_distance = value.contact_distance;

        if (options.snapshot_dir && cfg.snapshot_every > 0 && it % cfg.snapshot_every == 0) {
            char name[64];
            std::snprintf(name, sizeof(name), "_s%d_%06d.obj", options.stage, it);
            const auto path = *options.snapshot_dir / (options.snapshot_prefix + name);
            write_mesh(state.vertices, result.faces, path);
            result.record.snapshots.push_back(path);
        }

        adam_step(result.field, value.grad, adam, cfg.adam);
        if (!result.field.all_finite()) throw NonFiniteLossError(it, "Jacobian field update");

        rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        result.record.iterations.push_back(rec);
        if (options.on_iteration) options.on_iteration(rec);
    }
    result.vertices = system.solve(result.field);
    return result;
}

/// Two-stage baseline: stage 1 optimizes the semantic term only (or starts from the
/// guidance mesh itself), stage 2 refines that result for the body terms only. Stage 2
/// treats the stage-1 shape as its rest mesh.
inline RunResult run_two_stage(const TriMesh& tmpl, const BodySpec* body, const GuidanceTarget& target, const ObjectiveConfig& cfg,
                               bool start_from_guidance, const RenderSettings& render = {}, const RunOptions& options = {})
{
    cfg.validate();
    if (!target.mesh) throw PreconditionError("two-stage optimization needs a guidance mesh");

    RunRecord record;
    TriMesh stage1_mesh;
    if (start_from_guidance) {
        stage1_mesh = *target.mesh;
    } else {
        ObjectiveConfig semantic_only = cfg;
        semantic_only.body.lambda_contact = 0.0;
        semantic_only.body.lambda_penetration = 0.0;
        RunOptions o1 = options;
        o1.stage = 1;
        auto stage1 = run_optimization(tmpl, body, target, semantic_only, render, o1);
        record = std::move(stage1.record);
        stage1_mesh = TriMesh(std::move(stage1.vertices), std::move(stage1.faces));
    }

    ObjectiveConfig body_only = cfg;
    body_only.lambda_semantic = 0.0;
    RunOptions o2 = options;
    o2.stage = 2;
    if (start_from_guidance) o2.pin_vertex = -1;
    auto stage2 = run_optimization(stage1_mesh, body, target, body_only, render, o2);
    for (auto& r : stage2.record.iterations) record.iterations.push_back(r);
    for (auto& s : stage2.record.snapshots) record.snapshots.push_back(s);
    stage2.record = std::move(record);
    return stage2;
}

} // namespace bodyfit
