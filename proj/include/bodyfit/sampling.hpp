#pragma once

#include "errors.hpp"
#include "mesh.hpp"

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

namespace bodyfit {

/// Surface samples stored with their barycentric provenance so they can be re-evaluated on
/// deformed positions and so point gradients can be scattered back to vertices.
struct SurfaceSampleSet {
    Points points = Points(0, 3);
    std::vector<int> faces;
    Points barycentric = Points(0, 3);  // weights of the face's three corners, rows sum to 1
    std::uint64_t seed = 0;

    Eigen::Index size() const noexcept { return points.rows(); }
};

namespace detail {

/// Uniform double in [0, 1) from the top 53 bits; independent of the standard library's
/// distribution implementations.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

} // namespace detail

/// Area-weighted uniform samples on the surface (V, F). Deterministic given seed.
inline SurfaceSampleSet sample_surface(const Points& V, const Faces& F, Eigen::Index count, std::uint64_t seed)
{
    if (count < 1) throw PreconditionError("sample count must be >= 1");
    if (F.rows() == 0) throw PreconditionError("cannot sample an empty mesh");

    std::vector<double> cumulative(static_cast<std::size_t>(F.rows()));
    double total = 0.0;
    for (Eigen::Index f = 0; f < F.rows(); ++f) {
        total += face_area(V, F, f);
        cumulative[static_cast<std::size_t>(f)] = total;
    }
    if (!(total > 0.0)) throw PreconditionError("cannot sample a mesh with zero total area");

    std::mt19937_64 rng(seed);
    SurfaceSampleSet s;
    s.seed = seed;
    s.points.resize(count, 3);
    s.barycentric.resize(count, 3);
    s.faces.resize(static_cast<std::size_t>(count));
    for (Eigen::Index i = 0; i < count; ++i) {
        const double pick = detail::unit_uniform(rng) * total;
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
        if (it == cumulative.end()) --it;
        const int f = static_cast<int>(it - cumulative.begin());
        const double r1 = std::sqrt(detail::unit_uniform(rng));
        const double r2 = detail::unit_uniform(rng);
        const Eigen::Vector3d w(1.0 - r1, r1 * (1.0 - r2), r1 * r2);
        s.faces[static_cast<std::size_t>(i)] = f;
        s.barycentric.row(i) = w.transpose();
        s.points.row(i) = w[0] * V.row(F(f, 0)) + w[1] * V.row(F(f, 1)) + w[2] * V.row(F(f, 2));
    }
    return s;
}

inline SurfaceSampleSet sample_surface(const TriMesh& mesh, Eigen::Index count, std::uint64_t seed)
{
    return sample_surface(mesh.vertices(), mesh.faces(), count, seed);
}

/// Re-evaluates sample positions on new vertex positions (same connectivity).
inline Points sample_positions(const SurfaceSampleSet& s, const Points& V, const Faces& F)
{
    Points P(s.size(), 3);
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        const int f = s.faces[static_cast<std::size_t>(i)];
        P.row(i) = s.barycentric(i, 0) * V.row(F(f, 0)) + s.barycentric(i, 1) * V.row(F(f, 1)) +
                   s.barycentric(i, 2) * V.row(F(f, 2));
    }
    return P;
}

/// Adjoint of sample_positions: accumulates per-point gradients onto vertices.
inline Points scatter_to_vertices(const SurfaceSampleSet& s, const Points& point_grad, const Faces& F,
                                  Eigen::Index num_vertices)
{
    Points G = Points::Zero(num_vertices, 3);
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        const int f = s.faces[static_cast<std::size_t>(i)];
        for (int k = 0; k < 3; ++k) G.row(F(f, k)) += s.barycentric(i, k) * point_grad.row(i);
    }
    return G;
}

} // namespace bodyfit
