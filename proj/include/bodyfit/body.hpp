#pragma once

#include "bvh.hpp"
#include "errors.hpp"
#include "mesh.hpp"
#include "parallel.hpp"

#include <cmath>
#include <vector>

namespace bodyfit {

/// Winding numbers within this distance of 0.5 are treated as undecidable (open or badly
/// oriented body around the query).
inline constexpr double kWindingAmbiguityBand = 0.1;

/// Body mesh, designated contact points and the acceleration structure over its faces.
struct BodySpec {
    TriMesh body;
    Points contacts = Points(0, 3);
    TriangleBVH bvh;
    double surface_tolerance = 0.0;  // points closer than this are "on" the surface
};

/// Builds the body; contact points may be empty (only valid when the contact weight is 0).
inline BodySpec build_body(TriMesh body, Points contacts)
{
    if (body.empty()) throw PreconditionError("body mesh has no faces");
    if (contacts.cols() != 3 && contacts.size() > 0) throw PreconditionError("contact points must be n x 3");
    BodySpec spec;
    spec.bvh = TriangleBVH(body.vertices(), body.faces());
    spec.surface_tolerance = 1e-10 * (1.0 + body.bounds().diagonal().norm());
    spec.body = std::move(body);
    spec.contacts = contacts.size() > 0 ? std::move(contacts) : Points(0, 3);
    return spec;
}

/// Resolves body-vertex indices to contact positions.
inline Points contacts_from_indices(const TriMesh& body, const std::vector<Eigen::Index>& indices)
{
    Points P(static_cast<Eigen::Index>(indices.size()), 3);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto v = indices[i];
        if (v < 0 || v >= body.num_vertices()) {
            throw PreconditionError("contact vertex index " + std::to_string(v) + " outside body vertex range");
        }
        P.row(static_cast<Eigen::Index>(i)) = body.vertices().row(v);
    }
    return P;
}

struct SignedDistance {
    double distance = 0.0;            // negative inside
    Eigen::Vector3d gradient = Eigen::Vector3d::Zero();  // d(distance)/d(query), unit length
    Eigen::Vector3d closest = Eigen::Vector3d::Zero();
    Eigen::Index face = -1;
    double winding = 0.0;
    bool decidable = true;
};

inline SignedDistance signed_distance(const BodySpec& spec, const Eigen::Vector3d& q)
{
    SignedDistance out;
    const ClosestHit hit = spec.bvh.closest(q);
    out.closest = hit.point;
    out.face = hit.face;
    const double unsigned_distance = std::sqrt(hit.squared_distance);
    out.winding = spec.bvh.winding_number(q);

    const Eigen::Vector3d face_normal = spec.body.normals().row(hit.face).transpose();
    if (unsigned_distance <= spec.surface_tolerance) {
        out.distance = unsigned_distance;
        out.gradient = face_normal;
        return out;
    }
    out.decidable = std::abs(out.winding - 0.5) >= kWindingAmbiguityBand;
    const double sign = out.winding > 0.5 ? -1.0 : 1.0;
    out.distance = sign * unsigned_distance;
    out.gradient = sign * (q - hit.point) / unsigned_distance;
    return out;
}

/// Batched query; runs in parallel over points, results in input order.
inline std::vector<SignedDistance> signed_distance(const BodySpec& spec, const Points& queries)
{
    std::vector<SignedDistance> out(static_cast<std::size_t>(queries.rows()));
    parallel_for(out.size(), [&](std::size_t i) {
        out[i] = signed_distance(spec, Eigen::Vector3d(queries.row(static_cast<Eigen::Index>(i)).transpose()));
    });
    return out;
}

} // namespace bodyfit
