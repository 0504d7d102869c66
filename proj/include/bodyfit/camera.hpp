#pragma once

#include "errors.hpp"
#include "mesh.hpp"

#include <cmath>
#include <vector>

namespace bodyfit {

/// Orthographic camera looking along `direction`. The frame spans
/// [-half_extent, half_extent]^2 around `center` in the image plane; pixel row 0 is at the
/// top (largest image-space y).
struct OrthoCamera {
    Eigen::Vector3d direction = Eigen::Vector3d(0, 0, -1);
    Eigen::Vector3d up = Eigen::Vector3d(0, 1, 0);
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    double half_extent = 1.0;
    int resolution = 64;

    struct Basis {
        Eigen::Vector3d right;
        Eigen::Vector3d up;
    };

    Basis basis() const
    {
        const Eigen::Vector3d f = direction.normalized();
        const Eigen::Vector3d r = f.cross(up);
        if (!(r.norm() > 1e-12) || !(direction.norm() > 0)) throw PreconditionError("degenerate camera: up is parallel to view direction");
        const Eigen::Vector3d rn = r.normalized();
        return {rn, rn.cross(f)};
    }

    double pixel_size() const { return 2.0 * half_extent / resolution; }

    /// Image-plane coordinates (model units) of pixel center (row, col).
    Eigen::Vector2d pixel_center(int row, int col) const
    {
        const double s = pixel_size();
        return {-half_extent + (col + 0.5) * s, half_extent - (row + 0.5) * s};
    }

    void validate() const
    {
        if (resolution < 16) throw PreconditionError("camera resolution must be >= 16");
        if (!(half_extent > 0)) throw PreconditionError("camera half extent must be positive");
        (void)basis();
    }
};

using CameraSet = std::vector<OrthoCamera>;

/// The eight cube-corner view directions.
inline std::vector<Eigen::Vector3d> default_view_directions()
{
    std::vector<Eigen::Vector3d> dirs;
    for (int sx : {-1, 1}) {
        for (int sy : {-1, 1}) {
            for (int sz : {-1, 1}) dirs.push_back(Eigen::Vector3d(sx, sy, sz).normalized());
        }
    }
    return dirs;
}

/// Cameras framing the union of the given point sets: centered on the union's bounding-box
/// center with half extent = margin x the largest distance from that center.
inline CameraSet make_cameras(const std::vector<const Points*>& framed, int resolution, double margin = 1.2,
                              std::vector<Eigen::Vector3d> directions = default_view_directions(),
                              const Eigen::Vector3d& up = Eigen::Vector3d(0, 1, 0))
{
    Eigen::AlignedBox3d box;
    for (const Points* P : framed) {
        for (Eigen::Index i = 0; i < P->rows(); ++i) box.extend(P->row(i).transpose());
    }
    if (box.isEmpty()) throw PreconditionError("cannot frame cameras around empty geometry");
    const Eigen::Vector3d center = box.center();
    double radius = 0.0;
    for (const Points* P : framed) {
        for (Eigen::Index i = 0; i < P->rows(); ++i) radius = std::max(radius, (P->row(i).transpose() - center).norm());
    }
    CameraSet cams;
    for (const auto& d : directions) {
        OrthoCamera c;
        c.direction = d.normalized();
        c.up = up;
        if (c.direction.cross(up).norm() < 1e-6) c.up = Eigen::Vector3d(0, 0, 1);
        c.center = center;
        c.half_extent = margin * std::max(radius, 1e-9);
        c.resolution = resolution;
        c.validate();
        cams.push_back(c);
    }
    return cams;
}

} // namespace bodyfit
