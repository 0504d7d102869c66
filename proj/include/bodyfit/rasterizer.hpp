#pragma once

#include "camera.hpp"
#include "errors.hpp"
#include "mesh.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

namespace bodyfit {

/// Square grid of coverage values in [0, 1], row-major, row 0 at the top.
struct SilhouetteImage {
    int resolution = 0;
    int camera = 0;
    std::vector<double> pixels;

    double& at(int row, int col) { return pixels[static_cast<std::size_t>(row * resolution + col)]; }
    double at(int row, int col) const { return pixels[static_cast<std::size_t>(row * resolution + col)]; }
    std::size_t size() const noexcept { return pixels.size(); }
};

/// Triangles contribute nothing where their signed distance is below -kSigmoidCutoff * sigma
/// (coverage < 1.6e-8).
inline constexpr double kSigmoidCutoff = 18.0;

namespace detail {

inline double sigmoid(double x)
{
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a.x() * b.y() - a.y() * b.x(); }

/// Signed 2D distance from p to triangle (a, b, c): positive inside, negative outside, with
/// its gradient with respect to the three corners.
struct TriangleDistance {
    double value = 0.0;
    std::array<Eigen::Vector2d, 3> grad;
};

inline bool inside_triangle(const Eigen::Vector2d& p, const std::array<Eigen::Vector2d, 3>& t)
{
    const double area2 = cross2(t[1] - t[0], t[2] - t[0]);
    if (std::abs(area2) <= 1e-300) return false;
    const double w0 = cross2(t[1] - p, t[2] - p) * area2;
    const double w1 = cross2(t[2] - p, t[0] - p) * area2;
    const double w2 = cross2(t[0] - p, t[1] - p) * area2;
    return w0 >= 0 && w1 >= 0 && w2 >= 0;
}

inline TriangleDistance triangle_distance(const Eigen::Vector2d& p, const std::array<Eigen::Vector2d, 3>& t, bool with_grad)
{
    TriangleDistance out;
    double best = std::numeric_limits<double>::infinity();
    int best_edge = 0;
    double best_t = 0.0;
    Eigen::Vector2d best_closest = Eigen::Vector2d::Zero();
    for (int e = 0; e < 3; ++e) {
        const Eigen::Vector2d& u = t[e];
        const Eigen::Vector2d& v = t[(e + 1) % 3];
        const Eigen::Vector2d uv = v - u;
        const double len2 = uv.squaredNorm();
        const double s = len2 > 0 ? std::clamp((p - u).dot(uv) / len2, 0.0, 1.0) : 0.0;
        const Eigen::Vector2d c = u + s * uv;
        const double d = (p - c).norm();
        if (d < best) {
            best = d;
            best_edge = e;
            best_t = s;
            best_closest = c;
        }
    }
    const double sign = inside_triangle(p, t) ? 1.0 : -1.0;
    out.value = sign * best;
    if (with_grad) {
        for (auto& g : out.grad) g.setZero();
        if (best > 0) {
            const Eigen::Vector2d w = (p - best_closest) / best;
            out.grad[best_edge] = -sign * (1.0 - best_t) * w;
            out.grad[(best_edge + 1) % 3] = -sign * best_t * w;
        }
    }
    return out;
}

struct Projection {
    std::vector<Eigen::Vector2d> points;
    OrthoCamera::Basis basis;
};

inline Projection project(const Points& V, const OrthoCamera& cam)
{
    Projection out;
    out.basis = cam.basis();
    out.points.resize(static_cast<std::size_t>(V.rows()));
    for (Eigen::Index i = 0; i < V.rows(); ++i) {
        const Eigen::Vector3d q = V.row(i).transpose() - cam.center;
        out.points[static_cast<std::size_t>(i)] = {out.basis.right.dot(q), out.basis.up.dot(q)};
    }
    return out;
}

struct PixelRange {
    int row_begin = 0, row_end = 0, col_begin = 0, col_end = 0;  // half-open
};

inline PixelRange pixel_range(const std::array<Eigen::Vector2d, 3>& t, const OrthoCamera& cam, double margin)
{
    double xmin = t[0].x(), xmax = t[0].x(), ymin = t[0].y(), ymax = t[0].y();
    for (int k = 1; k < 3; ++k) {
        xmin = std::min(xmin, t[k].x());
        xmax = std::max(xmax, t[k].x());
        ymin = std::min(ymin, t[k].y());
        ymax = std::max(ymax, t[k].y());
    }
    const double s = cam.pixel_size();
    const double h = cam.half_extent;
    const int R = cam.resolution;
    auto clamp_index = [R](double v) { return static_cast<int>(std::clamp(v, -1.0, static_cast<double>(R))); };
    PixelRange r;
    r.col_begin = std::max(0, clamp_index(std::ceil((xmin - margin + h) / s - 0.5)));
    r.col_end = std::min(R, clamp_index(std::floor((xmax + margin + h) / s - 0.5)) + 1);
    r.row_begin = std::max(0, clamp_index(std::ceil((h - (ymax + margin)) / s - 0.5)));
    r.row_end = std::min(R, clamp_index(std::floor((h - (ymin - margin)) / s - 0.5)) + 1);
    return r;
}

/// Per-pixel product of (1 - coverage_t) over all triangles t.
inline std::vector<double> uncovered_product(const Projection& proj, const Faces& F, const OrthoCamera& cam, double sigma)
{
    const int R = cam.resolution;
    std::vector<double> product(static_cast<std::size_t>(R * R), 1.0);
    const double margin = kSigmoidCutoff * sigma;
    for (Eigen::Index f = 0; f < F.rows(); ++f) {
        const std::array<Eigen::Vector2d, 3> t{proj.points[F(f, 0)], proj.points[F(f, 1)], proj.points[F(f, 2)]};
        const auto range = pixel_range(t, cam, margin);
        for (int row = range.row_begin; row < range.row_end; ++row) {
            for (int col = range.col_begin; col < range.col_end; ++col) {
                const auto d = triangle_distance(cam.pixel_center(row, col), t, false);
                if (d.value < -margin) continue;
                product[static_cast<std::size_t>(row * R + col)] *= sigmoid(-d.value / sigma);
            }
        }
    }
    return product;
}

} // namespace detail

/// Soft silhouette: coverage = 1 - prod_t (1 - sigmoid(d_t / sigma)), d_t the signed 2D
/// distance from the pixel center to projected triangle t (positive inside). sigma is in
/// model units; as sigma -> 0 the image tends to the binary silhouette.
inline SilhouetteImage render_silhouette(const Points& V, const Faces& F, const OrthoCamera& cam, double sigma,
                                         int camera_index = 0)
{
    if (!(sigma > 0)) throw PreconditionError("silhouette softness sigma must be positive");
    cam.validate();
    SilhouetteImage img;
    img.resolution = cam.resolution;
    img.camera = camera_index;
    const auto proj = detail::project(V, cam);
    auto product = detail::uncovered_product(proj, F, cam, sigma);
    img.pixels.resize(product.size());
    for (std::size_t i = 0; i < product.size(); ++i) img.pixels[i] = 1.0 - product[i];
    return img;
}

inline SilhouetteImage render_silhouette(const TriMesh& mesh, const OrthoCamera& cam, double sigma, int camera_index = 0)
{
    return render_silhouette(mesh.vertices(), mesh.faces(), cam, sigma, camera_index);
}

/// Vector-Jacobian product of render_silhouette: given dLoss/dPixel, returns dLoss/dVertex.
///
/// With P the per-pixel product of (1 - s_t), d(coverage)/d(d_t) = s_t * P / sigma, so no
/// division by (1 - s_t) is needed.
inline Points render_silhouette_backward(const Points& V, const Faces& F, const OrthoCamera& cam, double sigma,
                                         const std::vector<double>& pixel_grad, const std::vector<double>& product)
{
    if (!(sigma > 0)) throw PreconditionError("silhouette softness sigma must be positive");
    const int R = cam.resolution;
    if (pixel_grad.size() != static_cast<std::size_t>(R * R) || product.size() != pixel_grad.size()) {
        throw PreconditionError("pixel gradient size does not match camera resolution");
    }
    const auto proj = detail::project(V, cam);
    const double margin = kSigmoidCutoff * sigma;

    std::vector<Eigen::Vector2d> grad2(static_cast<std::size_t>(V.rows()), Eigen::Vector2d::Zero());
    for (Eigen::Index f = 0; f < F.rows(); ++f) {
        const std::array<Eigen::Vector2d, 3> t{proj.points[F(f, 0)], proj.points[F(f, 1)], proj.points[F(f, 2)]};
        const auto range = detail::pixel_range(t, cam, margin);
        std::array<Eigen::Vector2d, 3> acc{Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()};
        for (int row = range.row_begin; row < range.row_end; ++row) {
            for (int col = range.col_begin; col < range.col_end; ++col) {
                const auto idx = static_cast<std::size_t>(row * R + col);
                const double g = pixel_grad[idx];
                if (g == 0.0) continue;
                const auto d = detail::triangle_distance(cam.pixel_center(row, col), t, true);
                if (d.value < -margin) continue;
                const double s = detail::sigmoid(d.value / sigma);
                const double dd = g * s * product[idx] / sigma;
                if (dd == 0.0) continue;
                for (int k = 0; k < 3; ++k) acc[k] += dd * d.grad[k];
            }
        }
        for (int k = 0; k < 3; ++k) grad2[static_cast<std::size_t>(F(f, k))] += acc[k];
    }

    Points grad = Points::Zero(V.rows(), 3);
    for (Eigen::Index i = 0; i < V.rows(); ++i) {
        const auto& g = grad2[static_cast<std::size_t>(i)];
        grad.row(i) = (g.x() * proj.basis.right + g.y() * proj.basis.up).transpose();
    }
    return grad;
}

/// Same as above, recomputing the per-pixel products from scratch.
inline Points render_silhouette_backward(const Points& V, const Faces& F, const OrthoCamera& cam, double sigma,
                                         const std::vector<double>& pixel_grad)
{
    if (!(sigma > 0)) throw PreconditionError("silhouette softness sigma must be positive");
    const auto product = detail::uncovered_product(detail::project(V, cam), F, cam, sigma);
    return render_silhouette_backward(V, F, cam, sigma, pixel_grad, product);
}

struct ImageLossValue {
    double loss = 0.0;
    std::vector<std::vector<double>> pixel_grad;  // per view, d(loss)/d(pixel)
};

/// Mean over views of the per-pixel mean absolute difference.
inline ImageLossValue image_l1_loss(const std::vector<SilhouetteImage>& renders, const std::vector<SilhouetteImage>& targets)
{
    if (renders.size() != targets.size() || renders.empty()) throw PreconditionError("image loss needs matching, non-empty view sets");
    ImageLossValue out;
    out.pixel_grad.resize(renders.size());
    const double inv_k = 1.0 / static_cast<double>(renders.size());
    for (std::size_t k = 0; k < renders.size(); ++k) {
        const auto& a = renders[k];
        const auto& b = targets[k];
        if (a.resolution != b.resolution || a.size() != b.size()) throw PreconditionError("image loss: resolution mismatch in view " + std::to_string(k));
        const double inv_p = 1.0 / static_cast<double>(a.size());
        auto& g = out.pixel_grad[k];
        g.assign(a.size(), 0.0);
        double sum = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double diff = a.pixels[i] - b.pixels[i];
            sum += std::abs(diff);
            g[i] = diff > 0 ? inv_k * inv_p : (diff < 0 ? -inv_k * inv_p : 0.0);
        }
        out.loss += inv_k * inv_p * sum;
    }
    return out;
}

} // namespace bodyfit
