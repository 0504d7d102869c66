#pragma once

#include "errors.hpp"
#include "mesh.hpp"

#include <Eigen/Core>
#include <Eigen/Sparse>

#include <array>
#include <cmath>
#include <vector>

namespace bodyfit {

using Matrix3List = std::vector<Eigen::Matrix3d>;

/// Intrinsic per-face gradient of piecewise-linear functions on a rest mesh.
///
/// Row block f of the assembled 3m x n matrix G holds the ambient gradients of the three
/// hat functions of face f. For deformed positions V' (n x 3), (G V') restricted to block f
/// is the transpose of the tangential Jacobian D_f, which maps rest tangent vectors to
/// deformed tangent vectors and sends the rest normal to zero.
///
/// The full Jacobian reported by jacobians() completes D_f in the normal direction: the
/// rest unit normal is mapped to the deformed normal scaled by sqrt(deformed area / rest
/// area). This makes rest positions yield I, a uniform scale s yield sI and a rotation R
/// yield R. The completion is nonlinear in V' and is not part of G.
class FaceGradientOperator {
public:
    FaceGradientOperator() = default;

    explicit FaceGradientOperator(const TriMesh& mesh)
        : F_(mesh.faces()), areas_(mesh.areas()), normals_(mesh.normals()), num_vertices_(mesh.num_vertices())
    {
        const auto& V = mesh.vertices();
        const Eigen::Index m = F_.rows();
        grads_.resize(static_cast<std::size_t>(m));
        rest_cross_norm_.resize(m);
        std::vector<Eigen::Triplet<double>> triplets;
        triplets.reserve(static_cast<std::size_t>(9 * m));
        for (Eigen::Index f = 0; f < m; ++f) {
            const double area = areas_[f];
            if (!(area > kAreaEpsilon)) {
                throw DegenerateFaceError({static_cast<std::size_t>(f)});
            }
            const Eigen::Vector3d n = normals_.row(f).transpose();
            std::array<Eigen::Vector3d, 3> p;
            for (int k = 0; k < 3; ++k) p[k] = V.row(F_(f, k)).transpose();
            auto& g = grads_[static_cast<std::size_t>(f)];
            for (int k = 0; k < 3; ++k) {
                const Eigen::Vector3d opposite = p[(k + 2) % 3] - p[(k + 1) % 3];
                g[k] = n.cross(opposite) / (2.0 * area);
                for (int a = 0; a < 3; ++a) triplets.emplace_back(3 * f + a, F_(f, k), g[k][a]);
            }
            rest_cross_norm_[f] = 2.0 * area;
        }
        G_.resize(3 * m, num_vertices_);
        G_.setFromTriplets(triplets.begin(), triplets.end());
    }

    const Eigen::SparseMatrix<double>& matrix() const noexcept { return G_; }
    const Eigen::VectorXd& areas() const noexcept { return areas_; }
    const Faces& faces() const noexcept { return F_; }
    Eigen::Index num_faces() const noexcept { return F_.rows(); }
    Eigen::Index num_vertices() const noexcept { return num_vertices_; }

    /// Hat-function gradient of local vertex k (0..2) on face f.
    const Eigen::Vector3d& hat_gradient(Eigen::Index f, int k) const { return grads_[static_cast<std::size_t>(f)][k]; }

    /// Tangential Jacobian D_f = sum_k v'_k grad(phi_k)^T.
    Eigen::Matrix3d tangential_jacobian(const Points& Vd, Eigen::Index f) const
    {
        Eigen::Matrix3d D = Eigen::Matrix3d::Zero();
        for (int k = 0; k < 3; ++k) D += Vd.row(F_(f, k)).transpose() * hat_gradient(f, k).transpose();
        return D;
    }

    Matrix3List tangential_jacobians(const Points& Vd) const
    {
        check_rows(Vd);
        Matrix3List out(static_cast<std::size_t>(F_.rows()));
        for (Eigen::Index f = 0; f < F_.rows(); ++f) out[static_cast<std::size_t>(f)] = tangential_jacobian(Vd, f);
        return out;
    }

    /// Full 3x3 Jacobians of the map rest -> Vd, normal direction completed (see class doc).
    Matrix3List jacobians(const Points& Vd) const
    {
        check_rows(Vd);
        Matrix3List out(static_cast<std::size_t>(F_.rows()));
        for (Eigen::Index f = 0; f < F_.rows(); ++f) {
            const Eigen::Vector3d deformed_cross = face_cross(Vd, F_, f);
            const double scale = std::sqrt(deformed_cross.norm() * rest_cross_norm_[f]);
            const Eigen::Vector3d mapped_normal = scale > 0 ? Eigen::Vector3d(deformed_cross / scale) : Eigen::Vector3d::Zero();
            out[static_cast<std::size_t>(f)] = tangential_jacobian(Vd, f) + mapped_normal * normals_.row(f);
        }
        return out;
    }

private:
    void check_rows(const Points& Vd) const
    {
        if (Vd.rows() != num_vertices_) {
            throw PreconditionError("position count " + std::to_string(Vd.rows()) + " does not match operator vertex count " +
                                    std::to_string(num_vertices_));
        }
    }

    Faces F_ = Faces(0, 3);
    Eigen::VectorXd areas_;
    Points normals_ = Points(0, 3);
    Eigen::Index num_vertices_ = 0;
    std::vector<std::array<Eigen::Vector3d, 3>> grads_;
    Eigen::VectorXd rest_cross_norm_;
    Eigen::SparseMatrix<double> G_;
};

inline FaceGradientOperator build_gradient_operator(const TriMesh& mesh) { return FaceGradientOperator(mesh); }

} // namespace bodyfit
