#pragma once

#include "errors.hpp"
#include "gradient_operator.hpp"
#include "mesh.hpp"

#include <cmath>
#include <string>

namespace bodyfit {

/// One 3x3 matrix per template face; the optimization variable.
struct JacobianField {
    Matrix3List matrices;

    std::size_t size() const noexcept { return matrices.size(); }
    Eigen::Matrix3d& operator[](std::size_t i) { return matrices[i]; }
    const Eigen::Matrix3d& operator[](std::size_t i) const { return matrices[i]; }

    bool all_finite() const
    {
        for (const auto& J : matrices) {
            if (!J.allFinite()) return false;
        }
        return true;
    }
};

inline JacobianField init_identity_field(Eigen::Index num_faces)
{
    return JacobianField{Matrix3List(static_cast<std::size_t>(num_faces), Eigen::Matrix3d::Identity())};
}

inline JacobianField init_identity_field(const TriMesh& mesh) { return init_identity_field(mesh.num_faces()); }

struct RegularizerValue {
    double loss = 0.0;
    Matrix3List gradient;
};

/// Sum of unsquared Frobenius distances to the identity, sum_i ||J_i - I||_F, with the
/// subgradient 0 at J_i = I.
inline RegularizerValue field_regularizer(const JacobianField& field)
{
    RegularizerValue out;
    out.gradient.resize(field.size());
    for (std::size_t i = 0; i < field.size(); ++i) {
        const Eigen::Matrix3d diff = field[i] - Eigen::Matrix3d::Identity();
        const double norm = diff.norm();
        out.loss += norm;
        out.gradient[i] = norm > 0 ? Eigen::Matrix3d(diff / norm) : Eigen::Matrix3d::Zero();
    }
    return out;
}

} // namespace bodyfit
