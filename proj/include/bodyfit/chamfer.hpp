#pragma once

#include "errors.hpp"
#include "mesh.hpp"
#include "nearest.hpp"
#include "sampling.hpp"

namespace bodyfit {

struct ChamferValue {
    double loss = 0.0;
    Points grad = Points(0, 3);  // d(loss)/d(source point)
};

/// Two-sided Chamfer distance
///   1/|S| sum_p min_q ||p - q||^2 + 1/|T| sum_q min_p ||q - p||^2
/// with the gradient taken with respect to the source points only.
inline ChamferValue chamfer_loss(const Points& source, const Points& target)
{
    if (source.rows() == 0 || target.rows() == 0) throw PreconditionError("Chamfer distance needs non-empty point sets");
    ChamferValue out;
    out.grad = Points::Zero(source.rows(), 3);

    const PointIndex target_index(target);
    const double inv_s = 1.0 / static_cast<double>(source.rows());
    for (Eigen::Index i = 0; i < source.rows(); ++i) {
        const Eigen::Vector3d p = source.row(i).transpose();
        const Eigen::Index j = target_index.nearest(p);
        const Eigen::Vector3d diff = p - target.row(j).transpose();
        out.loss += inv_s * diff.squaredNorm();
        out.grad.row(i) += 2.0 * inv_s * diff.transpose();
    }

    const PointIndex source_index(source);
    const double inv_t = 1.0 / static_cast<double>(target.rows());
    for (Eigen::Index j = 0; j < target.rows(); ++j) {
        const Eigen::Vector3d q = target.row(j).transpose();
        const Eigen::Index i = source_index.nearest(q);
        const Eigen::Vector3d diff = source.row(i).transpose() - q;
        out.loss += inv_t * diff.squaredNorm();
        out.grad.row(i) += 2.0 * inv_t * diff.transpose();
    }
    return out;
}

inline ChamferValue chamfer_loss(const SurfaceSampleSet& source, const SurfaceSampleSet& target)
{
    return chamfer_loss(source.points, target.points);
}

} // namespace bodyfit
