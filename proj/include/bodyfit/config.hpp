#pragma once

#include "body.hpp"
#include "errors.hpp"
#include "guidance.hpp"
#include "obj_io.hpp"
#include "objective.hpp"
#include "optimize.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace bodyfit {

enum class RunMode { Joint, TwoStage, TwoStageFromGuidance };

inline std::string to_string(RunMode mode)
{
    switch (mode) {
    case RunMode::Joint: return "joint";
    case RunMode::TwoStage: return "two_stage";
    case RunMode::TwoStageFromGuidance: return "two_stage_from_guidance";
    }
    return "joint";
}

/// Everything a `deform` run needs, as read from an INI-style config file. Paths are
/// resolved against the config file's directory.
struct RunConfig {
    std::filesystem::path source;
    std::filesystem::path template_path;
    std::optional<std::filesystem::path> guidance_path;
    std::optional<std::filesystem::path> body_path;
    std::optional<std::filesystem::path> contacts_path;  // OBJ with v records only
    std::vector<Eigen::Index> contact_indices;           // 0-based body vertex indices
    std::vector<std::filesystem::path> silhouette_paths; // PGM or PNG, one per camera

    ObjectiveConfig objective;
    Eigen::Index sample_count = 4096;
    ResamplePolicy resample = ResamplePolicy::PerIteration;
    RenderSettings render;
    std::optional<double> half_extent;  // unset: framed automatically
    RunMode mode = RunMode::Joint;
    Eigen::Index pin_vertex = -1;

    std::filesystem::path output_dir = "out";
    bool write_silhouettes = false;
};

namespace detail {

using Tree = boost::property_tree::ptree;

class ConfigReader {
public:
    ConfigReader(const Tree& tree, std::string file) : tree_(tree), file_(std::move(file)) {}

    void check_known(const std::map<std::string, std::set<std::string>>& schema) const
    {
        for (const auto& [section, body] : tree_) {
            const auto it = schema.find(section);
            if (it == schema.end()) fail("unknown section [" + section + "]");
            if (body.data().size() > 0 && body.empty()) fail("key '" + section + "' outside any section");
            for (const auto& [key, value] : body) {
                if (!it->second.count(key)) fail("unknown key '" + key + "' in section [" + section + "]");
            }
        }
    }

    std::optional<std::string> text(const std::string& section, const std::string& key) const
    {
        const auto node = tree_.get_child_optional(Tree::path_type(section + "/" + key, '/'));
        if (!node) return std::nullopt;
        return node->data();
    }

    template <typename T>
    void number(const std::string& section, const std::string& key, T& out) const
    {
        const auto s = text(section, key);
        if (!s) return;
        T value{};
        const auto* begin = s->data();
        const auto* end = s->data() + s->size();
        const auto [ptr, ec] = std::from_chars(begin, end, value);
        if (ec != std::errc() || ptr != end) fail("[" + section + "] " + key + ": expected a number, got '" + *s + "'");
        out = value;
    }

    void boolean(const std::string& section, const std::string& key, bool& out) const
    {
        const auto s = text(section, key);
        if (!s) return;
        if (*s == "true" || *s == "1" || *s == "yes") {
            out = true;
        } else if (*s == "false" || *s == "0" || *s == "no") {
            out = false;
        } else {
            fail("[" + section + "] " + key + ": expected true or false, got '" + *s + "'");
        }
    }

    [[noreturn]] void fail(const std::string& what) const { throw ParseError(file_, 0, what); }

private:
    const Tree& tree_;
    std::string file_;
};

inline std::vector<std::string> split_list(const std::string& s)
{
    std::string normalized = s;
    for (char& c : normalized) {
        if (c == ',' || c == ';') c = ' ';
    }
    std::istringstream in(normalized);
    std::vector<std::string> out;
    for (std::string item; in >> item;) out.push_back(item);
    return out;
}

} // namespace detail

/// Parses a config from text; `source` names the file in error messages and anchors
/// relative paths.
inline RunConfig parse_config(const std::string& text, const std::filesystem::path& source)
{
    detail::Tree tree;
    std::istringstream in(text);
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ParseError(source.string(), e.line(), e.message());
    }
    const detail::ConfigReader r(tree, source.string());
    r.check_known({
        {"meshes", {"template", "guidance", "body"}},
        {"contacts", {"file", "indices"}},
        {"guidance", {"silhouettes", "samples", "resample", "chamfer_weight", "image_weight"}},
        {"cameras", {"resolution", "sigma_pixels", "half_extent"}},
        {"weights", {"lambda_s", "lambda_c", "lambda_p", "alpha", "penetration_threshold"}},
        {"optimizer", {"iterations", "learning_rate", "beta1", "beta2", "epsilon", "seed", "pin_vertex", "mode"}},
        {"output", {"dir", "snapshot_every", "silhouettes"}},
    });

    const auto base = source.parent_path();
    auto resolve = [&](const std::string& p) { return std::filesystem::path(p).is_absolute() ? std::filesystem::path(p) : base / p; };

    RunConfig cfg;
    cfg.source = source;
    const auto tmpl = r.text("meshes", "template");
    if (!tmpl || tmpl->empty()) r.fail("[meshes] template is required");
    cfg.template_path = resolve(*tmpl);
    if (const auto g = r.text("meshes", "guidance")) cfg.guidance_path = resolve(*g);
    if (const auto b = r.text("meshes", "body")) cfg.body_path = resolve(*b);

    if (const auto f = r.text("contacts", "file")) cfg.contacts_path = resolve(*f);
    if (const auto idx = r.text("contacts", "indices")) {
        for (const auto& item : detail::split_list(*idx)) {
            Eigen::Index v = 0;
            const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
            if (ec != std::errc() || ptr != item.data() + item.size()) r.fail("[contacts] indices: bad index '" + item + "'");
            cfg.contact_indices.push_back(v);
        }
    }
    if (cfg.contacts_path && !cfg.contact_indices.empty()) r.fail("[contacts] give either file or indices, not both");

    if (const auto s = r.text("guidance", "silhouettes")) {
        for (const auto& item : detail::split_list(*s)) cfg.silhouette_paths.push_back(resolve(item));
    }
    r.number("guidance", "samples", cfg.sample_count);
    if (const auto policy = r.text("guidance", "resample")) {
        if (*policy == "per_iteration") {
            cfg.resample = ResamplePolicy::PerIteration;
        } else if (*policy == "fixed") {
            cfg.resample = ResamplePolicy::Fixed;
        } else {
            r.fail("[guidance] resample must be per_iteration or fixed");
        }
    }
    auto& obj = cfg.objective;
    r.number("guidance", "chamfer_weight", obj.guidance.chamfer);
    r.number("guidance", "image_weight", obj.guidance.image);

    r.number("cameras", "resolution", cfg.render.resolution);
    r.number("cameras", "sigma_pixels", cfg.render.sigma_pixels);
    if (r.text("cameras", "half_extent")) {
        double h = 0;
        r.number("cameras", "half_extent", h);
        cfg.half_extent = h;
    }

    r.number("weights", "lambda_s", obj.lambda_semantic);
    r.number("weights", "lambda_c", obj.body.lambda_contact);
    r.number("weights", "lambda_p", obj.body.lambda_penetration);
    r.number("weights", "alpha", obj.alpha);
    r.number("weights", "penetration_threshold", obj.body.penetration_threshold);

    r.number("optimizer", "iterations", obj.iterations);
    r.number("optimizer", "learning_rate", obj.adam.learning_rate);
    r.number("optimizer", "beta1", obj.adam.beta1);
    r.number("optimizer", "beta2", obj.adam.beta2);
    r.number("optimizer", "epsilon", obj.adam.epsilon);
    r.number("optimizer", "seed", obj.seed);
    r.number("optimizer", "pin_vertex", cfg.pin_vertex);
    if (const auto mode = r.text("optimizer", "mode")) {
        if (*mode == "joint") {
            cfg.mode = RunMode::Joint;
        } else if (*mode == "two_stage") {
            cfg.mode = RunMode::TwoStage;
        } else if (*mode == "two_stage_from_guidance") {
            cfg.mode = RunMode::TwoStageFromGuidance;
        } else {
            r.fail("[optimizer] mode must be joint, two_stage or two_stage_from_guidance");
        }
    }

    if (const auto dir = r.text("output", "dir")) cfg.output_dir = resolve(*dir);
    else cfg.output_dir = resolve("out");
    r.number("output", "snapshot_every", obj.snapshot_every);
    r.boolean("output", "silhouettes", cfg.write_silhouettes);

    if (cfg.sample_count < 1) r.fail("[guidance] samples must be >= 1");
    if (cfg.half_extent && !(*cfg.half_extent > 0)) r.fail("[cameras] half_extent must be positive");
    try {
        obj.validate();
    } catch (const PreconditionError& e) {
        r.fail(e.what());
    }
    // Without a body the default body weights are dropped; explicit ones are an error below.
    if (!cfg.body_path) {
        if (!r.text("weights", "lambda_c")) obj.body.lambda_contact = 0.0;
        if (!r.text("weights", "lambda_p")) obj.body.lambda_penetration = 0.0;
    }
    const bool body_weighted = obj.body.lambda_contact > 0 || obj.body.lambda_penetration > 0;
    if (body_weighted && !cfg.body_path) r.fail("body weights > 0 but [meshes] body is not set");
    if (obj.body.lambda_contact > 0 && !cfg.contacts_path && cfg.contact_indices.empty()) {
        r.fail("lambda_c > 0 but no [contacts] are given");
    }
    if (cfg.mode != RunMode::Joint && !cfg.guidance_path) r.fail("two-stage modes need [meshes] guidance");
    return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file " + path.string());
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config(text, path);
}

/// Loads the body and resolves its contact points (file or indices).
inline BodySpec load_body(const RunConfig& cfg)
{
    if (!cfg.body_path) throw PreconditionError("no body mesh configured");
    TriMesh body = load_mesh(*cfg.body_path);
    Points contacts(0, 3);
    if (cfg.contacts_path) contacts = load_points(*cfg.contacts_path);
    if (!cfg.contact_indices.empty()) contacts = contacts_from_indices(body, cfg.contact_indices);
    return build_body(std::move(body), std::move(contacts));
}

/// Cameras for a run: eight default views, framed automatically unless a half extent is set.
inline CameraSet config_cameras(const RunConfig& cfg, const TriMesh& tmpl, const std::optional<TriMesh>& guidance)
{
    std::vector<const Points*> framed{&tmpl.vertices()};
    if (guidance) framed.push_back(&guidance->vertices());
    CameraSet cams = make_cameras(framed, cfg.render.resolution);
    if (cfg.half_extent) {
        for (auto& c : cams) c.half_extent = *cfg.half_extent;
    }
    return cams;
}

/// Serializes a config back to INI text (paths as given, relative to `base` where possible).
inline std::string format_config(const RunConfig& cfg, const std::filesystem::path& base)
{
    auto rel = [&](const std::filesystem::path& p) { return std::filesystem::path(p).lexically_relative(base).generic_string(); };
    auto num = [](double v) {
        std::string s;
        append_number(s, v);
        return s;
    };
    const auto& o = cfg.objective;
    std::string out;
    out += "[meshes]\ntemplate = " + rel(cfg.template_path) + "\n";
    if (cfg.guidance_path) out += "guidance = " + rel(*cfg.guidance_path) + "\n";
    if (cfg.body_path) out += "body = " + rel(*cfg.body_path) + "\n";
    if (cfg.contacts_path || !cfg.contact_indices.empty()) {
        out += "\n[contacts]\n";
        if (cfg.contacts_path) out += "file = " + rel(*cfg.contacts_path) + "\n";
        if (!cfg.contact_indices.empty()) {
            out += "indices =";
            for (auto v : cfg.contact_indices) out += " " + std::to_string(v);
            out += "\n";
        }
    }
    out += "\n[guidance]\nsamples = " + std::to_string(cfg.sample_count) + "\n";
    out += std::string("resample = ") + (cfg.resample == ResamplePolicy::Fixed ? "fixed" : "per_iteration") + "\n";
    out += "chamfer_weight = " + num(o.guidance.chamfer) + "\nimage_weight = " + num(o.guidance.image) + "\n";
    out += "\n[cameras]\nresolution = " + std::to_string(cfg.render.resolution) + "\nsigma_pixels = " + num(cfg.render.sigma_pixels) + "\n";
    out += "\n[weights]\nlambda_s = " + num(o.lambda_semantic) + "\nlambda_c = " + num(o.body.lambda_contact) +
           "\nlambda_p = " + num(o.body.lambda_penetration) + "\nalpha = " + num(o.alpha) +
           "\npenetration_threshold = " + num(o.body.penetration_threshold) + "\n";
    out += "\n[optimizer]\niterations = " + std::to_string(o.iterations) + "\nlearning_rate = " + num(o.adam.learning_rate) +
           "\nseed = " + std::to_string(o.seed) + "\nmode = " + to_string(cfg.mode) + "\n";
    if (cfg.pin_vertex >= 0) out += "pin_vertex = " + std::to_string(cfg.pin_vertex) + "\n";
    out += "\n[output]\ndir = " + rel(cfg.output_dir) + "\nsnapshot_every = " + std::to_string(o.snapshot_every) + "\n";
    return out;
}

} // namespace bodyfit
