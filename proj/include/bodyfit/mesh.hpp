#pragma once

#include "errors.hpp"

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstddef>
#include <numeric>
#include <vector>

namespace bodyfit {

using Points = Eigen::MatrixX3d;  // one 3D point per row
using Faces = Eigen::MatrixX3i;   // one index triple per row

/// Faces with squared-area-units below this are rejected as degenerate.
inline constexpr double kAreaEpsilon = 1e-12;

inline Eigen::Vector3d face_cross(const Points& V, const Faces& F, Eigen::Index f)
{
    const Eigen::Vector3d a = V.row(F(f, 0)).transpose();
    const Eigen::Vector3d b = V.row(F(f, 1)).transpose();
    const Eigen::Vector3d c = V.row(F(f, 2)).transpose();
    return (b - a).cross(c - a);
}

inline double face_area(const Points& V, const Faces& F, Eigen::Index f)
{
    return 0.5 * face_cross(V, F, f).norm();
}

inline Eigen::VectorXd face_areas(const Points& V, const Faces& F)
{
    Eigen::VectorXd areas(F.rows());
    for (Eigen::Index f = 0; f < F.rows(); ++f) areas[f] = face_area(V, F, f);
    return areas;
}

/// Indexed triangle mesh. Construction validates indices and rejects degenerate faces;
/// rest areas and unit normals are cached.
class TriMesh {
public:
    TriMesh() = default;

    TriMesh(Points vertices, Faces faces) : V_(std::move(vertices)), F_(std::move(faces))
    {
        std::vector<std::size_t> bad;
        for (Eigen::Index f = 0; f < F_.rows(); ++f) {
            for (int k = 0; k < 3; ++k) {
                if (F_(f, k) < 0 || F_(f, k) >= V_.rows()) {
                    throw PreconditionError("face " + std::to_string(f) + " references vertex " +
                                            std::to_string(F_(f, k)) + " outside [0, " +
                                            std::to_string(V_.rows()) + ")");
                }
            }
            const bool repeated = F_(f, 0) == F_(f, 1) || F_(f, 1) == F_(f, 2) || F_(f, 0) == F_(f, 2);
            if (repeated || face_area(V_, F_, f) <= kAreaEpsilon) bad.push_back(static_cast<std::size_t>(f));
        }
        if (!bad.empty()) throw DegenerateFaceError(std::move(bad));

        areas_ = face_areas(V_, F_);
        normals_.resize(F_.rows(), 3);
        for (Eigen::Index f = 0; f < F_.rows(); ++f) normals_.row(f) = face_cross(V_, F_, f).normalized().transpose();
    }

    const Points& vertices() const noexcept { return V_; }
    const Faces& faces() const noexcept { return F_; }
    Eigen::Index num_vertices() const noexcept { return V_.rows(); }
    Eigen::Index num_faces() const noexcept { return F_.rows(); }
    bool empty() const noexcept { return F_.rows() == 0; }

    const Eigen::VectorXd& areas() const noexcept { return areas_; }
    const Points& normals() const noexcept { return normals_; }
    double total_area() const { return areas_.sum(); }

    Eigen::Vector3d vertex(Eigen::Index i) const { return V_.row(i).transpose(); }

    Eigen::AlignedBox3d bounds() const
    {
        Eigen::AlignedBox3d box;
        for (Eigen::Index i = 0; i < V_.rows(); ++i) box.extend(vertex(i));
        return box;
    }

    /// Same connectivity with replaced (validated) positions.
    TriMesh with_vertices(Points vertices) const { return TriMesh(std::move(vertices), F_); }

    bool operator==(const TriMesh& other) const
    {
        return V_.rows() == other.V_.rows() && F_.rows() == other.F_.rows() && V_ == other.V_ && F_ == other.F_;
    }

private:
    Points V_ = Points(0, 3);
    Faces F_ = Faces(0, 3);
    Eigen::VectorXd areas_;
    Points normals_ = Points(0, 3);
};

/// Vertex-connected components via union-find; returns a component label per vertex
/// (labels ordered by lowest vertex index).
inline std::vector<int> connected_components(Eigen::Index num_vertices, const Faces& F)
{
    std::vector<Eigen::Index> parent(static_cast<std::size_t>(num_vertices));
    std::iota(parent.begin(), parent.end(), Eigen::Index{0});
    auto find = [&](Eigen::Index x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (Eigen::Index f = 0; f < F.rows(); ++f) {
        for (int k = 1; k < 3; ++k) {
            const auto a = find(F(f, 0));
            const auto b = find(F(f, k));
            if (a != b) parent[std::max(a, b)] = std::min(a, b);
        }
    }
    std::vector<int> label(parent.size(), -1);
    std::vector<int> root_label(parent.size(), -1);
    int next = 0;
    for (Eigen::Index v = 0; v < num_vertices; ++v) {
        const auto r = find(v);
        if (root_label[r] < 0) root_label[r] = next++;
        label[v] = root_label[r];
    }
    return label;
}

} // namespace bodyfit
