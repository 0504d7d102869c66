#pragma once

#include "body.hpp"
#include "fixtures.hpp"
#include "guidance.hpp"
#include "objective.hpp"
#include "poisson.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace bodyfit {

struct GradcheckOptions {
    std::uint64_t seed = 7;
    double step = 1e-6;             // central-difference step on Jacobian entries
    double field_noise = 0.05;      // std-dev of the random perturbation around identity
    double floor_fraction = 1e-3;   // relative-error denominator floor, as a fraction of max |fd|
    Eigen::Index chamfer_samples = 200;
    int image_resolution = 32;
    double sigma_pixels = 1.0;
};

struct GradcheckEntry {
    std::string term;
    double max_relative_error = 0.0;
    double max_abs_gradient = 0.0;
    std::size_t entries = 0;
};

struct GradcheckReport {
    std::vector<GradcheckEntry> terms;
    double max_relative_error() const
    {
        double m = 0.0;
        for (const auto& t : terms) m = std::max(m, t.max_relative_error);
        return m;
    }
};

/// Max over entries of |a - f| / max(|f|, floor_fraction * max|f|).
inline double relative_gradient_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& reference, double floor_fraction)
{
    const double scale = reference.cwiseAbs().maxCoeff();
    const double floor = std::max(floor_fraction * scale, 1e-300);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < analytic.size(); ++i) {
        worst = std::max(worst, std::abs(analytic[i] - reference[i]) / std::max(std::abs(reference[i]), floor));
    }
    return worst;
}

/// The bundled 20-face gradcheck fixture: an icosahedron poking into a flat-topped body,
/// a fixed-sample Chamfer target and two silhouette views of a different shape.
struct GradcheckFixture {
    TriMesh object;
    BodySpec body;
    GuidanceTarget target;
    CameraSet cameras;
    std::vector<SilhouetteImage> silhouettes;
};

inline GradcheckFixture make_gradcheck_fixture(const GradcheckOptions& opt)
{
    GradcheckFixture fx;
    fx.object = fixtures::icosahedron(0.5, Eigen::Vector3d(0.03, 0.2, -0.02));
    Points contacts(3, 3);
    contacts << 0.4, 0.3, 0.1, -0.2, 0.6, 0.3, 0.0, -0.1, 0.45;
    fx.body = build_body(fixtures::box(Eigen::Vector3d(-2, -2, -2), Eigen::Vector3d(2, 0, 2), 2), contacts);

    fx.target.mesh = fixtures::icosphere(1, 0.45, Eigen::Vector3d(0.1, 0.3, 0.0));
    fx.target.sample_count = opt.chamfer_samples;
    fx.target.policy = ResamplePolicy::Fixed;
    fx.target.seed = opt.seed;

    fx.cameras = make_cameras({&fx.object.vertices(), &fx.target.mesh->vertices()}, opt.image_resolution, 1.2,
                              {Eigen::Vector3d(0.3, -0.4, -1.0), Eigen::Vector3d(1.0, 0.2, 0.1)});
    fx.silhouettes = render_targets(*fx.target.mesh, fx.cameras, opt.sigma_pixels);
    return fx;
}

/// Compares the full-chain gradient (loss -> vertices -> Jacobians) with central finite
/// differences over all 9m Jacobian entries, for each loss term alone and for their
/// weighted sum.
inline GradcheckReport run_gradcheck(const GradcheckOptions& opt = {})
{
    const GradcheckFixture fx = make_gradcheck_fixture(opt);
    const PoissonSystem system(fx.object, build_gradient_operator(fx.object), 0);

    JacobianField field = init_identity_field(fx.object);
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> noise(0.0, opt.field_noise);
    for (auto& J : field.matrices) {
        for (int k = 0; k < 9; ++k) J.data()[k] += noise(rng);
    }

    struct Case {
        std::string name;
        ObjectiveConfig cfg;
    };
    auto only = [](double s, double chamfer, double image, double c, double p, double alpha) {
        ObjectiveConfig cfg;
        cfg.lambda_semantic = s;
        cfg.guidance = {chamfer, image};
        cfg.body.lambda_contact = c;
        cfg.body.lambda_penetration = p;
        cfg.alpha = alpha;
        return cfg;
    };
    const std::vector<Case> cases{
        {"chamfer", only(1, 1, 0, 0, 0, 0)},   {"silhouette", only(1, 0, 1, 0, 0, 0)}, {"contact", only(0, 0, 0, 1, 0, 0)},
        {"penetration", only(0, 0, 0, 0, 1, 0)}, {"regularizer", only(0, 0, 0, 0, 0, 1)}, {"weighted_sum", only(1, 1, 0.5, 1, 10, 0.05)},
    };

    GradcheckReport report;
    for (const auto& c : cases) {
        GuidanceLoss guidance;
        if (c.cfg.lambda_semantic > 0) {
            GuidanceTarget target = fx.target;
            target.silhouettes = fx.silhouettes;
            guidance = make_guidance_loss(target, c.cfg.guidance, fx.object, fx.cameras, opt.sigma_pixels);
        }
        auto evaluate = [&](const JacobianField& f) {
            return total_loss_and_grad(solve_deformation(system, f), &fx.body, guidance, c.cfg, 0);
        };
        const auto value = evaluate(field);
        const Eigen::Index n = 9 * static_cast<Eigen::Index>(field.size());
        Eigen::VectorXd analytic(n), reference(n);
        JacobianField probe = field;
        for (std::size_t f = 0; f < field.size(); ++f) {
            for (int k = 0; k < 9; ++k) {
                const Eigen::Index i = 9 * static_cast<Eigen::Index>(f) + k;
                analytic[i] = value.grad[f].data()[k];
                const double x = field[f].data()[k];
                probe.matrices[f].data()[k] = x + opt.step;
                const double plus = evaluate(probe).total;
                probe.matrices[f].data()[k] = x - opt.step;
                const double minus = evaluate(probe).total;
                probe.matrices[f].data()[k] = x;
                reference[i] = (plus - minus) / (2.0 * opt.step);
            }
        }
        report.terms.push_back({c.name, relative_gradient_error(analytic, reference, opt.floor_fraction), reference.cwiseAbs().maxCoeff(),
                                static_cast<std::size_t>(n)});
    }
    return report;
}

} // namespace bodyfit
