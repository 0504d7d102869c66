#include <bodyfit/body_losses.hpp>
#include <bodyfit/chamfer.hpp>
#include <bodyfit/config.hpp>
#include <bodyfit/fixtures.hpp>
#include <bodyfit/gradcheck.hpp>
#include <bodyfit/image_io.hpp>
#include <bodyfit/obj_io.hpp>
#include <bodyfit/pipeline.hpp>
#include <bodyfit/png_io.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace bodyfit;

namespace {

std::string num(double v)
{
    std::string s;
    append_number(s, v);
    return s;
}

int cmd_deform(const fs::path& config_path, const std::optional<fs::path>& output, bool quiet)
{
    RunConfig cfg = load_config(config_path);
    if (output) cfg.output_dir = *output;
    const int total = cfg.objective.iterations * (cfg.mode == RunMode::TwoStage ? 2 : 1);
    int done = 0;
    const auto progress = [&](const IterationRecord& r) {
        ++done;
        if (quiet) return;
        if (done == 1 || done % 100 == 0 || done == total) {
            std::fprintf(stderr, "stage %d  iter %5d  total %.6g  semantic %.6g  contact %.6g  penetration %.6g  Dp %.4g  Dc %.4g\n",
                         r.stage, r.iteration, r.total, r.semantic, r.contact, r.penetration, r.penetration_score, r.contact_distance);
        }
    };
    const auto out = run_deform(cfg, progress);
    std::cout << "final mesh: " << out.final_mesh.string() << "\n";
    std::cout << "record: " << out.record.string() << "\n";
    if (out.metrics) {
        std::cout << "Dp=" << num(out.metrics->penetration_score) << " Dc=" << num(out.metrics->contact_distance)
                  << " penetrating_vertices=" << out.metrics->penetrating_vertices << "/" << out.metrics->vertex_count << "\n";
        std::cout << "penetration map: " << out.penetration_map->string() << "\n";
    }
    return 0;
}

int cmd_eval(const fs::path& object_path, const fs::path& body_path, const std::optional<fs::path>& contacts_path,
             const std::string& contact_indices, const std::optional<fs::path>& guidance_path, Eigen::Index samples,
             std::uint64_t seed, const std::optional<fs::path>& map_path)
{
    const TriMesh object = load_mesh(object_path);
    TriMesh body_mesh = load_mesh(body_path);
    Points contacts(0, 3);
    if (contacts_path) contacts = load_points(*contacts_path);
    if (!contact_indices.empty()) {
        std::vector<Eigen::Index> idx;
        for (const auto& item : detail::split_list(contact_indices)) idx.push_back(std::stol(item));
        contacts = contacts_from_indices(body_mesh, idx);
    }
    const BodySpec body = build_body(std::move(body_mesh), std::move(contacts));
    const auto m = eval_metrics(object, body);
    std::cout << "Dp=" << num(m.penetration_score) << "\n";
    if (body.contacts.rows() > 0) std::cout << "Dc=" << num(m.contact_distance) << "\n";
    std::cout << "penetrating_vertices=" << m.penetrating_vertices << "\nvertex_count=" << m.vertex_count << "\n";
    if (guidance_path) {
        const TriMesh guidance = load_mesh(*guidance_path);
        const auto cd = chamfer_loss(sample_surface(object, samples, seed), sample_surface(guidance, samples, seed + 1));
        std::cout << "CD=" << num(cd.loss) << "\n";
    }
    if (map_path) {
        write_penetration_map(m.signed_distances, *map_path);
        std::cout << "penetration map: " << map_path->string() << "\n";
    }
    return 0;
}

int cmd_render(const fs::path& mesh_path, const fs::path& out_dir, int resolution, double sigma_pixels,
               const std::vector<fs::path>& frame_paths, const std::string& format)
{
    const TriMesh mesh = load_mesh(mesh_path);
    std::vector<TriMesh> framing;
    for (const auto& p : frame_paths) framing.push_back(load_mesh(p));
    std::vector<const Points*> framed{&mesh.vertices()};
    for (const auto& m : framing) framed.push_back(&m.vertices());
    const auto cameras = make_cameras(framed, resolution);
    fs::create_directories(out_dir);
    for (std::size_t k = 0; k < cameras.size(); ++k) {
        const auto img = render_silhouette(mesh, cameras[k], sigma_pixels * cameras[k].pixel_size(), static_cast<int>(k));
        const auto path = out_dir / ("view" + std::to_string(k) + "." + format);
        if (format == "png") {
            write_png(img, path);
        } else {
            write_pgm(img, path);
        }
        std::cout << path.string() << "\n";
    }
    return 0;
}

int cmd_gradcheck(std::uint64_t seed, double tolerance)
{
    GradcheckOptions opt;
    opt.seed = seed;
    const auto report = run_gradcheck(opt);
    for (const auto& t : report.terms) {
        std::printf("%-13s entries %zu  max|grad| %.3e  max rel error %.3e\n", t.term.c_str(), t.entries, t.max_abs_gradient,
                    t.max_relative_error);
    }
    const double worst = report.max_relative_error();
    const bool ok = worst < tolerance;
    std::printf("max relative error %.3e (tolerance %.1e): %s\n", worst, tolerance, ok ? "PASS" : "FAIL");
    return ok ? 0 : 1;
}

int cmd_fixtures(const fs::path& out)
{
    const fs::path meshes = out / "meshes";
    fs::create_directories(meshes);
    const auto limb = fixtures::torus_on_limb();
    write_mesh(limb.body->body, meshes / "limb.obj");
    write_points(limb.body->contacts, meshes / "limb_contacts.obj");
    write_mesh(limb.template_mesh, meshes / "torus_template.obj");
    write_mesh(*limb.guidance, meshes / "torus_guidance.obj");
    const auto cube = fixtures::sphere_to_cube();
    write_mesh(cube.template_mesh, meshes / "sphere.obj");
    write_mesh(*cube.guidance, meshes / "cube.obj");
    const auto head = fixtures::head_with_contact_rings();
    write_mesh(head.body, meshes / "head.obj");
    write_points(head.contacts, meshes / "head_contacts.obj");

    const ObjectiveConfig base = fixtures::scenario_objective();
    auto torus_config = [&](RunMode mode, bool body_terms, const std::string& run) {
        RunConfig cfg;
        cfg.template_path = meshes / "torus_template.obj";
        cfg.guidance_path = meshes / "torus_guidance.obj";
        cfg.body_path = meshes / "limb.obj";
        cfg.contacts_path = meshes / "limb_contacts.obj";
        cfg.objective = base;
        if (!body_terms) {
            cfg.objective.body.lambda_contact = 0.0;
            cfg.objective.body.lambda_penetration = 0.0;
        }
        cfg.mode = mode;
        cfg.output_dir = out / "runs" / run;
        return cfg;
    };
    std::vector<std::pair<std::string, RunConfig>> configs{
        {"torus_joint.ini", torus_config(RunMode::Joint, true, "torus_joint")},
        {"torus_semantic_only.ini", torus_config(RunMode::Joint, false, "torus_semantic_only")},
        {"torus_two_stage.ini", torus_config(RunMode::TwoStage, true, "torus_two_stage")},
    };
    RunConfig sc;
    sc.template_path = meshes / "sphere.obj";
    sc.guidance_path = meshes / "cube.obj";
    sc.objective = base;
    sc.objective.body.lambda_contact = 0.0;
    sc.objective.body.lambda_penetration = 0.0;
    sc.pin_vertex = cube.pin_vertex;
    sc.output_dir = out / "runs" / "sphere_to_cube";
    configs.emplace_back("sphere_to_cube.ini", sc);
    for (const auto& [name, cfg] : configs) {
        write_text_file(out / name, format_config(cfg, out));
        std::cout << (out / name).string() << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Body-aware template mesh deformation through per-face Jacobian fields"};
    app.require_subcommand(1);

    auto* deform = app.add_subcommand("deform", "Run an optimization described by a config file");
    fs::path config_path;
    std::optional<fs::path> output;
    bool quiet = false;
    deform->add_option("config", config_path, "Config file (INI)")->required();
    deform->add_option("-o,--output", output, "Override the output directory");
    deform->add_flag("-q,--quiet", quiet, "No progress lines");

    auto* eval = app.add_subcommand("eval", "Penetration and contact metrics of an object against a body");
    fs::path object_path, body_path;
    std::optional<fs::path> contacts_path, guidance_path, map_path;
    std::string contact_indices;
    Eigen::Index samples = 20000;
    std::uint64_t eval_seed = 0;
    eval->add_option("--object", object_path, "Object mesh (OBJ)")->required();
    eval->add_option("--body", body_path, "Body mesh (OBJ)")->required();
    auto* contacts_opt = eval->add_option("--contacts", contacts_path, "Contact points (OBJ with v records)");
    eval->add_option("--contact-indices", contact_indices, "0-based body vertex indices, comma or space separated")->excludes(contacts_opt);
    eval->add_option("--guidance", guidance_path, "Guidance mesh; also reports the Chamfer distance to it");
    eval->add_option("--samples", samples, "Surface samples per side for the Chamfer distance")->check(CLI::PositiveNumber);
    eval->add_option("--seed", eval_seed, "Sampling seed");
    eval->add_option("--map", map_path, "Write the per-vertex signed distances here");

    auto* render = app.add_subcommand("render", "Render soft silhouettes from the eight default views");
    fs::path mesh_path, render_out;
    int resolution = 64;
    double sigma_pixels = 0.5;
    std::vector<fs::path> frame_paths;
    std::string format = "pgm";
    render->add_option("--mesh", mesh_path, "Mesh to render (OBJ)")->required();
    render->add_option("--out", render_out, "Output directory")->required();
    render->add_option("--resolution", resolution, "Image size in pixels")->check(CLI::Range(16, 8192));
    render->add_option("--sigma-pixels", sigma_pixels, "Edge softness in pixels")->check(CLI::PositiveNumber);
    render->add_option("--frame", frame_paths, "Additional meshes included in the camera framing");
    render->add_option("--format", format, "Image format")->check(CLI::IsMember({"pgm", "png"}));

    auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every loss gradient on the bundled fixture");
    std::uint64_t gc_seed = 7;
    double tolerance = 1e-3;
    gradcheck->add_option("--seed", gc_seed, "Seed of the random Jacobian field");
    gradcheck->add_option("--tolerance", tolerance, "Pass threshold on the max relative error")->check(CLI::PositiveNumber);

    auto* fixtures_cmd = app.add_subcommand("fixtures", "Write the bundled fixture meshes and example configs");
    fs::path fixtures_out;
    fixtures_cmd->add_option("--out", fixtures_out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*deform) return cmd_deform(config_path, output, quiet);
        if (*eval) return cmd_eval(object_path, body_path, contacts_path, contact_indices, guidance_path, samples, eval_seed, map_path);
        if (*render) return cmd_render(mesh_path, render_out, resolution, sigma_pixels, frame_paths, format);
        if (*gradcheck) return cmd_gradcheck(gc_seed, tolerance);
        if (*fixtures_cmd) return cmd_fixtures(fixtures_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
