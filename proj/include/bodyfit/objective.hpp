#pragma once

#include "adam.hpp"
#include "body.hpp"
#include "body_losses.hpp"
#include "errors.hpp"
#include "guidance.hpp"
#include "jacobian_field.hpp"
#include "poisson.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace bodyfit {

struct ObjectiveConfig {
    double lambda_semantic = 1.0;
    BodyLossParams body;  // lambda_c = 1, lambda_p = 10, threshold 0
    double alpha = 0.05;
    GuidanceWeights guidance;
    int iterations = 1000;
    AdamParams adam;
    int snapshot_every = 0;  // 0 disables snapshots
    std::uint64_t seed = 0;

    void validate() const
    {
        if (iterations < 1) throw PreconditionError("iterations must be >= 1");
        if (!(lambda_semantic >= 0) || !(alpha >= 0)) throw PreconditionError("loss weights must be >= 0");
        if (snapshot_every < 0) throw PreconditionError("snapshot interval must be >= 0");
        if (!(guidance.chamfer >= 0) || !(guidance.image >= 0)) throw PreconditionError("guidance weights must be >= 0");
        body.validate();
        adam.validate();
    }
};

/// Weighted loss terms at one evaluation; total is their sum in declaration order.
struct ObjectiveValue {
    double total = 0.0;
    double semantic = 0.0;     // lambda_s * L_s
    double contact = 0.0;      // lambda_c * L_c
    double penetration = 0.0;  // lambda_p * L_p
    double regularizer = 0.0;  // alpha * sum ||J - I||_F
    std::vector<std::pair<std::string, double>> guidance_terms;  // unweighted
    double penetration_score = 0.0;  // Dp
    double contact_distance = 0.0;   // Dc
    Matrix3List grad;                // d(total)/d(J_i)
};

namespace detail {

inline void require_finite(double value, int iteration, const char* term)
{
    if (!std::isfinite(value)) throw NonFiniteLossError(iteration, term);
}

} // namespace detail

/// Guidance loss L_s of a deformation state.
inline GuidanceLoss::Value guidance_loss(const DeformationState& state, const GuidanceLoss& loss, const Faces& F, int iteration)
{
    return loss.evaluate(state.vertices, F, iteration);
}

/// Total objective lambda_s L_s + lambda_c L_c + lambda_p L_p + alpha R and its gradient
/// with respect to the Jacobian field. Vertex-space gradients of the first three terms are
/// summed and pulled back through the Poisson adjoint; R's gradient is added directly.
/// `body` may be null when both body weights are zero.
inline ObjectiveValue total_loss_and_grad(const DeformationState& state, const BodySpec* body, const GuidanceLoss& guidance,
                                          const ObjectiveConfig& cfg, int iteration = 0)
{
    if (state.system == nullptr) throw PreconditionError("deformation state has no Poisson system");
    const PoissonSystem& system = *state.system;
    const Faces& F = system.gradient_operator().faces();
    const Points& V = state.vertices;
    ObjectiveValue out;
    Points vertex_grad = Points::Zero(V.rows(), 3);

    if (cfg.lambda_semantic > 0 && !guidance.empty()) {
        const auto g = guidance_loss(state, guidance, F, iteration);
        out.guidance_terms = g.terms;
        for (const auto& [name, value] : g.terms) detail::require_finite(value, iteration, name.c_str());
        out.semantic = cfg.lambda_semantic * g.loss;
        vertex_grad += cfg.lambda_semantic * g.grad;
    }

    const bool want_contact = cfg.body.lambda_contact > 0;
    const bool want_penetration = cfg.body.lambda_penetration > 0;
    if ((want_contact || want_penetration) && body == nullptr) throw PreconditionError("body loss weights > 0 but no body given");
    if (body != nullptr) {
        const auto sd = signed_distance(*body, V);
        for (const auto& s : sd) {
            if (s.distance < 0) out.penetration_score += s.distance * s.distance;
        }
        if (body->contacts.rows() > 0) {
            LossValue c;
            try {
                c = contact_loss(V, body->contacts);
            } catch (const Error& e) {
                throw TermError("contact", e.what());
            }
            out.contact_distance = c.loss;
            if (want_contact) {
                detail::require_finite(c.loss, iteration, "contact");
                out.contact = cfg.body.lambda_contact * c.loss;
                vertex_grad += cfg.body.lambda_contact * c.grad;
            }
        } else if (want_contact) {
            throw TermError("contact", "contact weight > 0 but the body has no contact points");
        }
        if (want_penetration) {
            LossValue p;
            try {
                p = penetration_loss(sd, cfg.body.penetration_threshold);
            } catch (const Error& e) {
                throw TermError("penetration", e.what());
            }
            detail::require_finite(p.loss, iteration, "penetration");
            out.penetration = cfg.body.lambda_penetration * p.loss;
            vertex_grad += cfg.body.lambda_penetration * p.grad;
        }
    }
    if (!vertex_grad.allFinite()) throw NonFiniteLossError(iteration, "vertex gradient");

    out.grad = system.backprop(vertex_grad);

    if (cfg.alpha > 0) {
        const auto reg = field_regularizer(state.field);
        detail::require_finite(reg.loss, iteration, "regularizer");
        out.regularizer = cfg.alpha * reg.loss;
        for (std::size_t i = 0; i < out.grad.size(); ++i) out.grad[i] += cfg.alpha * reg.gradient[i];
    }

    out.total = out.semantic + out.contact + out.penetration + out.regularizer;
    detail::require_finite(out.total, iteration, "total");
    return out;
}

} // namespace bodyfit
