#pragma once

#include "body.hpp"
#include "errors.hpp"
#include "io_util.hpp"
#include "mesh.hpp"
#include "nearest.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace bodyfit {

struct LossValue {
    double loss = 0.0;
    Points grad = Points(0, 3);  // d(loss)/d(vertex), one row per object vertex
};

/// Contact attraction: mean over contact points of the squared distance to the nearest
/// object vertex. The gradient reaches only those nearest vertices. Unweighted.
inline LossValue contact_loss(const Points& object_vertices, const Points& contacts)
{
    if (contacts.rows() == 0) throw PreconditionError("contact loss needs at least one contact point");
    if (object_vertices.rows() == 0) throw PreconditionError("contact loss needs at least one object vertex");
    LossValue out;
    out.grad = Points::Zero(object_vertices.rows(), 3);
    const PointIndex index(object_vertices);
    const double inv = 1.0 / static_cast<double>(contacts.rows());
    for (Eigen::Index c = 0; c < contacts.rows(); ++c) {
        const Eigen::Vector3d vc = contacts.row(c).transpose();
        const Eigen::Index v = index.nearest(vc);
        const Eigen::Vector3d diff = object_vertices.row(v).transpose() - vc;
        out.loss += diff.squaredNorm() * inv;
        out.grad.row(v) += 2.0 * inv * diff.transpose();
    }
    return out;
}

/// Penetration penalty sum_{d_i < threshold} d_i^2 from precomputed signed distances.
inline LossValue penetration_loss(const std::vector<SignedDistance>& sd, double threshold)
{
    LossValue out;
    out.grad = Points::Zero(static_cast<Eigen::Index>(sd.size()), 3);
    std::vector<std::size_t> undecidable;
    for (std::size_t i = 0; i < sd.size(); ++i) {
        if (!sd[i].decidable) undecidable.push_back(i);
    }
    if (!undecidable.empty()) throw SignUndecidableError(std::move(undecidable));
    for (std::size_t i = 0; i < sd.size(); ++i) {
        const double d = sd[i].distance;
        if (d < threshold) {
            out.loss += d * d;
            out.grad.row(static_cast<Eigen::Index>(i)) = 2.0 * d * sd[i].gradient.transpose();
        }
    }
    return out;
}

/// Penetration penalty over object vertices, d_i the signed distance to the body
/// (negative inside).
inline LossValue penetration_loss(const Points& object_vertices, const BodySpec& body, double threshold)
{
    return penetration_loss(signed_distance(body, object_vertices), threshold);
}

struct BodyLossParams {
    double lambda_contact = 1.0;
    double lambda_penetration = 10.0;
    double penetration_threshold = 0.0;

    void validate() const
    {
        if (!(lambda_contact >= 0) || !(lambda_penetration >= 0)) throw PreconditionError("body loss weights must be >= 0");
        if (!std::isfinite(penetration_threshold)) throw PreconditionError("penetration threshold must be finite");
    }
};

struct BodyLossValue {
    double loss = 0.0;
    double contact = 0.0;      // unweighted
    double penetration = 0.0;  // unweighted
    Points grad = Points(0, 3);
};

/// lambda_c * contact + lambda_p * penetration; a zero weight skips its term entirely.
inline BodyLossValue body_loss(const Points& object_vertices, const BodySpec& body, const BodyLossParams& params)
{
    params.validate();
    BodyLossValue out;
    out.grad = Points::Zero(object_vertices.rows(), 3);
    if (params.lambda_contact > 0) {
        LossValue c;
        try {
            c = contact_loss(object_vertices, body.contacts);
        } catch (const Error& e) {
            throw TermError("contact", e.what());
        }
        out.contact = c.loss;
        out.loss += params.lambda_contact * c.loss;
        out.grad += params.lambda_contact * c.grad;
    }
    if (params.lambda_penetration > 0) {
        LossValue p;
        try {
            p = penetration_loss(object_vertices, body, params.penetration_threshold);
        } catch (const Error& e) {
            throw TermError("penetration", e.what());
        }
        out.penetration = p.loss;
        out.loss += params.lambda_penetration * p.loss;
        out.grad += params.lambda_penetration * p.grad;
    }
    return out;
}

struct BodyMetrics {
    double penetration_score = 0.0;  // Dp: sum of squared depths of vertices inside the body
    double contact_distance = 0.0;   // Dc: contact loss value (0 when no contacts)
    std::vector<double> signed_distances;
    std::size_t penetrating_vertices = 0;
    std::size_t vertex_count = 0;
};

inline BodyMetrics eval_metrics(const Points& object_vertices, const BodySpec& body)
{
    BodyMetrics m;
    m.vertex_count = static_cast<std::size_t>(object_vertices.rows());
    const auto sd = signed_distance(body, object_vertices);
    m.signed_distances.reserve(sd.size());
    for (const auto& s : sd) {
        m.signed_distances.push_back(s.distance);
        if (s.distance < 0) {
            m.penetration_score += s.distance * s.distance;
            ++m.penetrating_vertices;
        }
    }
    if (body.contacts.rows() > 0 && object_vertices.rows() > 0) m.contact_distance = contact_loss(object_vertices, body.contacts).loss;
    return m;
}

inline BodyMetrics eval_metrics(const TriMesh& object, const BodySpec& body) { return eval_metrics(object.vertices(), body); }

/// Penetration map sidecar: one signed distance per line, in vertex order.
inline void write_penetration_map(const std::vector<double>& signed_distances, const std::filesystem::path& path)
{
    std::string out;
    for (double d : signed_distances) {
        append_number(out, d);
        out += '\n';
    }
    write_text_file(path, out);
}

} // namespace bodyfit
