#pragma once

// Procedural meshes and the bundled scenarios used by tests, the acceptance suite and the
// CLI `fixtures` subcommand. All meshes are closed and outward oriented.

#include "body.hpp"
#include "guidance.hpp"
#include "mesh.hpp"
#include "objective.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <tuple>
#include <utility>
#include <vector>

namespace bodyfit::fixtures {

namespace detail {

inline double signed_volume(const Points& V, const Faces& F)
{
    double vol = 0.0;
    for (Eigen::Index f = 0; f < F.rows(); ++f) {
        const Eigen::Vector3d a = V.row(F(f, 0)).transpose();
        const Eigen::Vector3d b = V.row(F(f, 1)).transpose();
        const Eigen::Vector3d c = V.row(F(f, 2)).transpose();
        vol += a.dot(b.cross(c)) / 6.0;
    }
    return vol;
}

inline TriMesh oriented(Points V, Faces F)
{
    if (signed_volume(V, F) < 0) F.col(1).swap(F.col(2));
    return TriMesh(std::move(V), std::move(F));
}

inline Points to_points(const std::vector<Eigen::Vector3d>& v)
{
    Points P(static_cast<Eigen::Index>(v.size()), 3);
    for (std::size_t i = 0; i < v.size(); ++i) P.row(static_cast<Eigen::Index>(i)) = v[i].transpose();
    return P;
}

inline Faces to_faces(const std::vector<Eigen::Vector3i>& f)
{
    Faces F(static_cast<Eigen::Index>(f.size()), 3);
    for (std::size_t i = 0; i < f.size(); ++i) F.row(static_cast<Eigen::Index>(i)) = f[i].transpose();
    return F;
}

} // namespace detail

/// Regular icosahedron (12 vertices, 20 faces) inscribed in a sphere of the given radius.
inline TriMesh icosahedron(double radius = 1.0, const Eigen::Vector3d& center = Eigen::Vector3d::Zero())
{
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Eigen::Vector3d> v{{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                                   {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    for (auto& p : v) p = center + radius * p.normalized();
    const std::vector<Eigen::Vector3i> f{{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                                         {11, 10, 2}, {10, 7, 6}, {7, 1, 8},   {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                                         {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
    return detail::oriented(detail::to_points(v), detail::to_faces(f));
}

/// Icosphere: `subdivisions` rounds of 1-to-4 splits of the icosahedron, projected to the
/// sphere (10 * 4^s + 2 vertices).
inline TriMesh icosphere(int subdivisions, double radius = 1.0, const Eigen::Vector3d& center = Eigen::Vector3d::Zero())
{
    const TriMesh base = icosahedron(1.0);
    std::vector<Eigen::Vector3d> v;
    for (Eigen::Index i = 0; i < base.num_vertices(); ++i) v.push_back(base.vertex(i));
    std::vector<Eigen::Vector3i> f;
    for (Eigen::Index i = 0; i < base.num_faces(); ++i) f.push_back(base.faces().row(i).transpose());

    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            if (auto it = midpoint.find(key); it != midpoint.end()) return it->second;
            v.push_back((v[static_cast<std::size_t>(a)] + v[static_cast<std::size_t>(b)]).normalized());
            const int idx = static_cast<int>(v.size()) - 1;
            midpoint.emplace(key, idx);
            return idx;
        };
        std::vector<Eigen::Vector3i> next;
        for (const auto& t : f) {
            const int ab = mid(t[0], t[1]);
            const int bc = mid(t[1], t[2]);
            const int ca = mid(t[2], t[0]);
            next.emplace_back(t[0], ab, ca);
            next.emplace_back(t[1], bc, ab);
            next.emplace_back(t[2], ca, bc);
            next.emplace_back(ab, bc, ca);
        }
        f = std::move(next);
    }
    for (auto& p : v) p = center + radius * p.normalized();
    return detail::oriented(detail::to_points(v), detail::to_faces(f));
}

/// Torus around the y axis: major radius R in the xz-plane, tube radius r. Vertex (i, j)
/// sits at major angle 2 pi i / major_segments and tube angle 2 pi j / minor_segments, so
/// j = minor_segments / 2 is the inner ring at distance R - r from the axis.
inline TriMesh torus(double major_radius, double minor_radius, int major_segments, int minor_segments,
                     const Eigen::Vector3d& center = Eigen::Vector3d::Zero())
{
    std::vector<Eigen::Vector3d> v;
    for (int i = 0; i < major_segments; ++i) {
        const double u = 2.0 * std::numbers::pi * i / major_segments;
        for (int j = 0; j < minor_segments; ++j) {
            const double w = 2.0 * std::numbers::pi * j / minor_segments;
            const double rho = major_radius + minor_radius * std::cos(w);
            v.emplace_back(center + Eigen::Vector3d(rho * std::cos(u), minor_radius * std::sin(w), rho * std::sin(u)));
        }
    }
    std::vector<Eigen::Vector3i> f;
    auto id = [&](int i, int j) { return (i % major_segments) * minor_segments + (j % minor_segments); };
    for (int i = 0; i < major_segments; ++i) {
        for (int j = 0; j < minor_segments; ++j) {
            f.emplace_back(id(i, j), id(i + 1, j), id(i + 1, j + 1));
            f.emplace_back(id(i, j), id(i + 1, j + 1), id(i, j + 1));
        }
    }
    return detail::oriented(detail::to_points(v), detail::to_faces(f));
}

/// Axis-aligned box [min, max] with each face split into n x n quads (2 n^2 triangles).
inline TriMesh box(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi, int n = 1)
{
    std::vector<Eigen::Vector3d> v;
    std::vector<Eigen::Vector3i> f;
    std::map<std::tuple<long, long, long>, int> lookup;  // dedupe shared edge vertices
    auto vertex = [&](const Eigen::Vector3d& p) {
        const auto key = std::make_tuple(std::lround(p.x() * 1e9), std::lround(p.y() * 1e9), std::lround(p.z() * 1e9));
        if (auto it = lookup.find(key); it != lookup.end()) return it->second;
        v.push_back(p);
        lookup.emplace(key, static_cast<int>(v.size()) - 1);
        return static_cast<int>(v.size()) - 1;
    };
    for (int axis = 0; axis < 3; ++axis) {
        for (int side = 0; side < 2; ++side) {
            const int a1 = (axis + 1) % 3;
            const int a2 = (axis + 2) % 3;
            std::vector<std::vector<int>> grid(static_cast<std::size_t>(n + 1), std::vector<int>(static_cast<std::size_t>(n + 1)));
            for (int i = 0; i <= n; ++i) {
                for (int j = 0; j <= n; ++j) {
                    Eigen::Vector3d p;
                    p[axis] = side == 0 ? lo[axis] : hi[axis];
                    p[a1] = lo[a1] + (hi[a1] - lo[a1]) * i / n;
                    p[a2] = lo[a2] + (hi[a2] - lo[a2]) * j / n;
                    grid[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = vertex(p);
                }
            }
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    const int a = grid[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
                    const int b = grid[static_cast<std::size_t>(i + 1)][static_cast<std::size_t>(j)];
                    const int c = grid[static_cast<std::size_t>(i + 1)][static_cast<std::size_t>(j + 1)];
                    const int d = grid[static_cast<std::size_t>(i)][static_cast<std::size_t>(j + 1)];
                    // outward: (a1 x a2) = axis direction; flip on the low side
                    if (side == 1) {
                        f.emplace_back(a, b, c);
                        f.emplace_back(a, c, d);
                    } else {
                        f.emplace_back(a, c, b);
                        f.emplace_back(a, d, c);
                    }
                }
            }
        }
    }
    return detail::oriented(detail::to_points(v), detail::to_faces(f));
}

/// Closed cylinder along y: `rings` vertex rings evenly spaced over [-half_length,
/// half_length], `segments` vertices per ring, fan caps with a center vertex. With an odd
/// ring count, ring (rings - 1) / 2 lies at y = 0.
inline TriMesh cylinder(double radius, double half_length, int segments, int rings)
{
    std::vector<Eigen::Vector3d> v;
    std::vector<Eigen::Vector3i> f;
    for (int r = 0; r < rings; ++r) {
        const double y = -half_length + 2.0 * half_length * r / (rings - 1);
        for (int s = 0; s < segments; ++s) {
            const double u = 2.0 * std::numbers::pi * s / segments;
            v.emplace_back(radius * std::cos(u), y, radius * std::sin(u));
        }
    }
    auto id = [&](int r, int s) { return r * segments + (s % segments); };
    for (int r = 0; r + 1 < rings; ++r) {
        for (int s = 0; s < segments; ++s) {
            f.emplace_back(id(r, s), id(r + 1, s + 1), id(r + 1, s));
            f.emplace_back(id(r, s), id(r, s + 1), id(r + 1, s + 1));
        }
    }
    const int bottom = static_cast<int>(v.size());
    v.emplace_back(0, -half_length, 0);
    const int top = static_cast<int>(v.size());
    v.emplace_back(0, half_length, 0);
    for (int s = 0; s < segments; ++s) {
        f.emplace_back(bottom, id(0, s + 1), id(0, s));
        f.emplace_back(top, id(rings - 1, s), id(rings - 1, s + 1));
    }
    return detail::oriented(detail::to_points(v), detail::to_faces(f));
}

/// Indices of cylinder vertices on ring `ring`.
inline std::vector<Eigen::Index> cylinder_ring(int segments, int ring)
{
    std::vector<Eigen::Index> out;
    for (int s = 0; s < segments; ++s) out.push_back(static_cast<Eigen::Index>(ring * segments + s));
    return out;
}

/// Everything a run needs besides the objective weights.
struct Scenario {
    TriMesh template_mesh;
    std::optional<BodySpec> body;
    std::optional<TriMesh> guidance;
    Eigen::Index pin_vertex = -1;
};

/// Limb: cylinder radius 0.5 along y. Contacts: its 32-vertex ring at y = 0. Template: a
/// torus whose inner ring coincides with the contact ring. Guidance: a tighter torus whose
/// inner ring (radius 0.47) cuts 0.03 into the limb.
inline Scenario torus_on_limb()
{
    constexpr int segments = 32;
    constexpr int rings = 13;
    TriMesh limb = cylinder(0.5, 1.5, segments, rings);
    Points contacts = contacts_from_indices(limb, cylinder_ring(segments, rings / 2));
    Scenario s;
    s.template_mesh = torus(0.7, 0.2, segments, 12);
    s.guidance = torus(0.67, 0.2, 40, 12);
    s.body = build_body(std::move(limb), std::move(contacts));
    return s;
}

/// Unit-radius icosphere (642 vertices) to an axis-aligned cube of half size 1 whose
/// bottom face passes through the pinned lowest sphere vertex.
inline Scenario sphere_to_cube()
{
    Scenario s;
    s.template_mesh = icosphere(3, 1.0);
    const auto& V = s.template_mesh.vertices();
    Eigen::Index lowest = 0;
    V.col(1).minCoeff(&lowest);
    s.pin_vertex = lowest;
    const double y0 = V(lowest, 1);
    s.guidance = box(Eigen::Vector3d(-1, y0, -1), Eigen::Vector3d(1, y0 + 2.0, 1), 4);
    return s;
}

/// Objective settings used with the bundled scenarios. The regularizer weight is a sum over
/// faces, so at ~1k faces the library default of 0.05 pins the field to identity.
inline ObjectiveConfig scenario_objective()
{
    ObjectiveConfig cfg;
    cfg.alpha = 1e-5;
    cfg.adam.learning_rate = 5e-3;
    cfg.iterations = 1000;
    return cfg;
}

/// Sphere "head" of radius 1 with two marked contact rings (the icosphere vertices within
/// a thin band around latitudes y = 0.3 and y = 0.6).
inline BodySpec head_with_contact_rings(int subdivisions = 3)
{
    TriMesh head = icosphere(subdivisions, 1.0);
    std::vector<Eigen::Index> ring;
    for (Eigen::Index i = 0; i < head.num_vertices(); ++i) {
        const double y = head.vertices()(i, 1);
        if (std::abs(y - 0.3) < 0.04 || std::abs(y - 0.6) < 0.04) ring.push_back(i);
    }
    Points contacts = contacts_from_indices(head, ring);
    return build_body(std::move(head), std::move(contacts));
}

} // namespace bodyfit::fixtures
