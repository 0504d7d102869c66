#pragma once

#include "camera.hpp"
#include "chamfer.hpp"
#include "errors.hpp"
#include "mesh.hpp"
#include "parallel.hpp"
#include "rasterizer.hpp"
#include "sampling.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace bodyfit {

enum class ResamplePolicy {
    PerIteration,  // fresh samples every step, seeded from (seed, iteration)
    Fixed,         // provenance drawn once on the template, target samples drawn once
};

/// Geometric design target: a guidance mesh, per-camera target silhouettes, or both.
struct GuidanceTarget {
    std::optional<TriMesh> mesh;
    std::vector<SilhouetteImage> silhouettes;  // empty: rendered from `mesh` when needed
    Eigen::Index sample_count = 4096;
    ResamplePolicy policy = ResamplePolicy::PerIteration;
    std::uint64_t seed = 0;
};

struct GuidanceWeights {
    double chamfer = 1.0;
    double image = 0.0;
};

struct TermValue {
    double loss = 0.0;
    Points grad = Points(0, 3);  // d(loss)/d(vertex)
};

/// A differentiable loss on the deformed vertices. Implementations must be pure for a
/// given (vertices, iteration) pair.
class GuidanceTerm {
public:
    virtual ~GuidanceTerm() = default;
    virtual std::string name() const = 0;
    virtual TermValue evaluate(const Points& V, const Faces& F, int iteration) const = 0;
};

/// Two-sided Chamfer distance between surface samples of the deformed mesh and of the
/// guidance mesh; gradients reach vertices through barycentric provenance.
class ChamferTerm final : public GuidanceTerm {
public:
    ChamferTerm(TriMesh guidance, const TriMesh& template_mesh, Eigen::Index samples, ResamplePolicy policy, std::uint64_t seed)
        : guidance_(std::move(guidance)), samples_(samples), policy_(policy), seed_(seed)
    {
        if (samples_ < 1) throw PreconditionError("Chamfer sample count must be >= 1");
        if (guidance_.empty()) throw PreconditionError("guidance mesh has no faces");
        if (policy_ == ResamplePolicy::Fixed) {
            fixed_source_ = sample_surface(template_mesh, samples_, source_seed(0));
            fixed_target_ = sample_surface(guidance_, samples_, target_seed(0)).points;
        }
    }

    std::string name() const override { return "chamfer"; }

    TermValue evaluate(const Points& V, const Faces& F, int iteration) const override
    {
        const SurfaceSampleSet source =
            policy_ == ResamplePolicy::Fixed ? fixed_source_ : sample_surface(V, F, samples_, source_seed(iteration));
        const Points target =
            policy_ == ResamplePolicy::Fixed ? fixed_target_ : sample_surface(guidance_, samples_, target_seed(iteration)).points;
        const Points P = sample_positions(source, V, F);
        const auto cd = chamfer_loss(P, target);
        return {cd.loss, scatter_to_vertices(source, cd.grad, F, V.rows())};
    }

    const TriMesh& guidance() const noexcept { return guidance_; }

private:
    std::uint64_t source_seed(int iteration) const { return seed_ + 2 * static_cast<std::uint64_t>(iteration); }
    std::uint64_t target_seed(int iteration) const { return seed_ + 2 * static_cast<std::uint64_t>(iteration) + 1; }

    TriMesh guidance_;
    Eigen::Index samples_;
    ResamplePolicy policy_;
    std::uint64_t seed_;
    SurfaceSampleSet fixed_source_;
    Points fixed_target_ = Points(0, 3);
};

/// Multi-view L1 difference between soft silhouettes of the deformed mesh and targets.
class SilhouetteTerm final : public GuidanceTerm {
public:
    /// sigma_pixels: rasterizer softness in pixels of each camera.
    SilhouetteTerm(CameraSet cameras, double sigma_pixels, std::vector<SilhouetteImage> targets)
        : cameras_(std::move(cameras)), sigma_pixels_(sigma_pixels), targets_(std::move(targets))
    {
        if (cameras_.empty()) throw PreconditionError("silhouette term needs at least one camera");
        if (targets_.size() != cameras_.size()) {
            throw PreconditionError("silhouette term: " + std::to_string(targets_.size()) + " target images for " +
                                    std::to_string(cameras_.size()) + " cameras");
        }
        for (std::size_t k = 0; k < cameras_.size(); ++k) {
            cameras_[k].validate();
            if (targets_[k].resolution != cameras_[k].resolution) {
                throw PreconditionError("target silhouette " + std::to_string(k) + " resolution does not match its camera");
            }
        }
        if (!(sigma_pixels_ > 0)) throw PreconditionError("sigma must be positive");
    }

    std::string name() const override { return "silhouette"; }

    TermValue evaluate(const Points& V, const Faces& F, int /*iteration*/) const override
    {
        const std::size_t K = cameras_.size();
        std::vector<SilhouetteImage> renders(K);
        std::vector<std::vector<double>> products(K);
        parallel_for(K, [&](std::size_t k) {
            const auto& cam = cameras_[k];
            const double sigma = sigma_pixels_ * cam.pixel_size();
            products[k] = detail::uncovered_product(detail::project(V, cam), F, cam, sigma);
            renders[k].resolution = cam.resolution;
            renders[k].camera = static_cast<int>(k);
            renders[k].pixels.resize(products[k].size());
            for (std::size_t i = 0; i < products[k].size(); ++i) renders[k].pixels[i] = 1.0 - products[k][i];
        }, 1);
        const auto l1 = image_l1_loss(renders, targets_);
        std::vector<Points> partial(K);
        parallel_for(K, [&](std::size_t k) {
            const auto& cam = cameras_[k];
            partial[k] = render_silhouette_backward(V, F, cam, sigma_pixels_ * cam.pixel_size(), l1.pixel_grad[k], products[k]);
        }, 1);
        TermValue out{l1.loss, Points::Zero(V.rows(), 3)};
        for (const auto& p : partial) out.grad += p;
        return out;
    }

    const CameraSet& cameras() const noexcept { return cameras_; }
    double sigma_pixels() const noexcept { return sigma_pixels_; }

private:
    CameraSet cameras_;
    double sigma_pixels_;
    std::vector<SilhouetteImage> targets_;
};

/// Weighted registry of guidance terms; L_s = sum_t weight_t * term_t.
class GuidanceLoss {
public:
    struct Entry {
        double weight = 1.0;
        std::shared_ptr<const GuidanceTerm> term;
    };

    struct Value {
        double loss = 0.0;
        std::vector<std::pair<std::string, double>> terms;  // unweighted, registration order
        Points grad = Points(0, 3);
    };

    void add(double weight, std::shared_ptr<const GuidanceTerm> term)
    {
        if (!(weight >= 0)) throw PreconditionError("guidance term weight must be >= 0");
        if (!term) throw PreconditionError("null guidance term");
        entries_.push_back({weight, std::move(term)});
    }

    const std::vector<Entry>& entries() const noexcept { return entries_; }
    bool empty() const noexcept { return entries_.empty(); }

    Value evaluate(const Points& V, const Faces& F, int iteration) const
    {
        Value out;
        out.grad = Points::Zero(V.rows(), 3);
        for (const auto& e : entries_) {
            if (e.weight == 0.0) {
                out.terms.emplace_back(e.term->name(), 0.0);
                continue;
            }
            TermValue t;
            try {
                t = e.term->evaluate(V, F, iteration);
            } catch (const Error& err) {
                throw TermError(e.term->name(), err.what());
            }
            out.terms.emplace_back(e.term->name(), t.loss);
            out.loss += e.weight * t.loss;
            out.grad += e.weight * t.grad;
        }
        return out;
    }

private:
    std::vector<Entry> entries_;
};

/// Renders target silhouettes of the guidance mesh for each camera.
inline std::vector<SilhouetteImage> render_targets(const TriMesh& mesh, const CameraSet& cameras, double sigma_pixels)
{
    std::vector<SilhouetteImage> out;
    for (std::size_t k = 0; k < cameras.size(); ++k) {
        out.push_back(render_silhouette(mesh, cameras[k], sigma_pixels * cameras[k].pixel_size(), static_cast<int>(k)));
    }
    return out;
}

/// Builds the Chamfer and silhouette terms for a target. Terms with weight 0 are still
/// registered (and logged as 0) when their data is available.
inline GuidanceLoss make_guidance_loss(const GuidanceTarget& target, const GuidanceWeights& weights, const TriMesh& template_mesh,
                                       const CameraSet& cameras, double sigma_pixels)
{
    if (!(weights.chamfer >= 0) || !(weights.image >= 0)) throw PreconditionError("guidance weights must be >= 0");
    GuidanceLoss loss;
    if (target.mesh) {
        loss.add(weights.chamfer,
                 std::make_shared<ChamferTerm>(*target.mesh, template_mesh, target.sample_count, target.policy, target.seed));
    } else if (weights.chamfer > 0) {
        throw PreconditionError("Chamfer guidance weight > 0 but no guidance mesh given");
    }
    if (weights.image > 0) {
        std::vector<SilhouetteImage> targets = target.silhouettes;
        if (targets.empty()) {
            if (!target.mesh) throw PreconditionError("image guidance weight > 0 but neither target silhouettes nor a guidance mesh given");
            targets = render_targets(*target.mesh, cameras, sigma_pixels);
        }
        loss.add(weights.image, std::make_shared<SilhouetteTerm>(cameras, sigma_pixels, std::move(targets)));
    }
    return loss;
}

} // namespace bodyfit
