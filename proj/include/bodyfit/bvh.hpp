#pragma once

#include "geometry.hpp"
#include "mesh.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <utility>
#include <vector>

namespace bodyfit {

struct ClosestHit {
    Eigen::Vector3d point = Eigen::Vector3d::Zero();
    double squared_distance = std::numeric_limits<double>::infinity();
    Eigen::Index face = -1;
};

/// Axis-aligned bounding-volume hierarchy over the faces of a triangle mesh.
///
/// Closest-point queries are exact branch-and-bound; ties on squared distance resolve to
/// the lowest face index, so results equal a brute-force scan. Winding numbers use the
/// hierarchical evaluation of Jacobson et al. 2013: for a query outside a node's box the
/// node's triangles contribute the same as the fan closing their boundary loops.
class TriangleBVH {
public:
    TriangleBVH() = default;

    TriangleBVH(const Points& V, const Faces& F, int leaf_size = 4) : V_(V), F_(F), leaf_size_(std::max(1, leaf_size))
    {
        order_.resize(static_cast<std::size_t>(F_.rows()));
        std::iota(order_.begin(), order_.end(), Eigen::Index{0});
        centroids_.resize(F_.rows(), 3);
        for (Eigen::Index f = 0; f < F_.rows(); ++f) {
            centroids_.row(f) = (V_.row(F_(f, 0)) + V_.row(F_(f, 1)) + V_.row(F_(f, 2))) / 3.0;
        }
        if (F_.rows() > 0) {
            nodes_.reserve(static_cast<std::size_t>(2 * F_.rows()));
            build(0, static_cast<std::size_t>(F_.rows()));
        }
    }

    bool empty() const noexcept { return nodes_.empty(); }
    const Points& vertices() const noexcept { return V_; }
    const Faces& faces() const noexcept { return F_; }

    ClosestHit closest(const Eigen::Vector3d& q) const
    {
        ClosestHit best;
        if (nodes_.empty()) return best;
        closest_recursive(0, q, best);
        return best;
    }

    /// Generalized winding number of the surface at q (1 inside, 0 outside for a closed,
    /// outward-oriented mesh).
    double winding_number(const Eigen::Vector3d& q) const
    {
        if (nodes_.empty()) return 0.0;
        return winding_recursive(0, q) / (4.0 * std::numbers::pi);
    }

    /// Direct sum over all faces; reference for the hierarchical evaluation.
    double winding_number_direct(const Eigen::Vector3d& q) const
    {
        double total = 0.0;
        for (Eigen::Index f = 0; f < F_.rows(); ++f) total += face_solid_angle(q, f);
        return total / (4.0 * std::numbers::pi);
    }

    Eigen::AlignedBox3d bounds() const { return nodes_.empty() ? Eigen::AlignedBox3d() : nodes_.front().box; }

private:
    struct Node {
        Eigen::AlignedBox3d box;
        std::size_t begin = 0, end = 0;  // range into order_ (leaves)
        int left = -1, right = -1;
        Eigen::Vector3d fan_center = Eigen::Vector3d::Zero();
        std::vector<std::pair<int, int>> boundary;  // directed boundary edges of the node's patch
        bool leaf() const noexcept { return left < 0; }
    };

    double face_solid_angle(const Eigen::Vector3d& q, Eigen::Index f) const
    {
        return solid_angle(q, V_.row(F_(f, 0)).transpose(), V_.row(F_(f, 1)).transpose(), V_.row(F_(f, 2)).transpose());
    }

    int build(std::size_t begin, std::size_t end)
    {
        const int index = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        Eigen::AlignedBox3d box;
        Eigen::AlignedBox3d centroid_box;
        for (std::size_t i = begin; i < end; ++i) {
            const auto f = order_[i];
            for (int k = 0; k < 3; ++k) box.extend(V_.row(F_(f, k)).transpose());
            centroid_box.extend(centroids_.row(f).transpose());
        }
        nodes_[index].box = box;
        nodes_[index].begin = begin;
        nodes_[index].end = end;
        nodes_[index].fan_center = box.center();
        nodes_[index].boundary = boundary_edges(begin, end);

        if (end - begin <= static_cast<std::size_t>(leaf_size_)) return index;

        int axis = 0;
        centroid_box.sizes().maxCoeff(&axis);
        const std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin), order_.begin() + static_cast<std::ptrdiff_t>(mid),
                         order_.begin() + static_cast<std::ptrdiff_t>(end), [&](Eigen::Index a, Eigen::Index b) {
                             const double ca = centroids_(a, axis);
                             const double cb = centroids_(b, axis);
                             return ca < cb || (ca == cb && a < b);
                         });
        const int left = build(begin, mid);
        const int right = build(mid, end);
        nodes_[index].left = left;
        nodes_[index].right = right;
        return index;
    }

    std::vector<std::pair<int, int>> boundary_edges(std::size_t begin, std::size_t end) const
    {
        // net multiplicity of each undirected edge, signed by direction (lo -> hi positive)
        std::map<std::pair<int, int>, int> count;
        for (std::size_t i = begin; i < end; ++i) {
            const auto f = order_[i];
            for (int k = 0; k < 3; ++k) {
                const int a = F_(f, k);
                const int b = F_(f, (k + 1) % 3);
                if (a < b) {
                    ++count[{a, b}];
                } else {
                    --count[{b, a}];
                }
            }
        }
        std::vector<std::pair<int, int>> out;
        for (const auto& [edge, c] : count) {
            for (int r = 0; r < std::abs(c); ++r) {
                out.push_back(c > 0 ? edge : std::make_pair(edge.second, edge.first));
            }
        }
        return out;
    }

    void closest_recursive(int index, const Eigen::Vector3d& q, ClosestHit& best) const
    {
        const Node& node = nodes_[static_cast<std::size_t>(index)];
        if (node.box.squaredExteriorDistance(q) > best.squared_distance) return;
        if (node.leaf()) {
            for (std::size_t i = node.begin; i < node.end; ++i) {
                const auto f = order_[i];
                const Eigen::Vector3d c = closest_point_on_triangle(q, V_.row(F_(f, 0)).transpose(),
                                                                    V_.row(F_(f, 1)).transpose(), V_.row(F_(f, 2)).transpose());
                const double d2 = (q - c).squaredNorm();
                if (d2 < best.squared_distance || (d2 == best.squared_distance && f < best.face)) {
                    best.squared_distance = d2;
                    best.point = c;
                    best.face = f;
                }
            }
            return;
        }
        const Node& l = nodes_[static_cast<std::size_t>(node.left)];
        const Node& r = nodes_[static_cast<std::size_t>(node.right)];
        const double dl = l.box.squaredExteriorDistance(q);
        const double dr = r.box.squaredExteriorDistance(q);
        if (dl <= dr) {
            closest_recursive(node.left, q, best);
            closest_recursive(node.right, q, best);
        } else {
            closest_recursive(node.right, q, best);
            closest_recursive(node.left, q, best);
        }
    }

    double winding_recursive(int index, const Eigen::Vector3d& q) const
    {
        const Node& node = nodes_[static_cast<std::size_t>(index)];
        const double margin = 1e-9 * (1.0 + node.box.diagonal().norm());
        Eigen::AlignedBox3d grown = node.box;
        grown.min().array() -= margin;
        grown.max().array() += margin;
        if (!grown.contains(q)) {
            double total = 0.0;
            for (const auto& [a, b] : node.boundary) {
                total += solid_angle(q, V_.row(a).transpose(), V_.row(b).transpose(), node.fan_center);
            }
            return total;
        }
        if (node.leaf()) {
            double total = 0.0;
            for (std::size_t i = node.begin; i < node.end; ++i) total += face_solid_angle(q, order_[i]);
            return total;
        }
        return winding_recursive(node.left, q) + winding_recursive(node.right, q);
    }

    Points V_ = Points(0, 3);
    Faces F_ = Faces(0, 3);
    int leaf_size_ = 4;
    std::vector<Eigen::Index> order_;
    Points centroids_ = Points(0, 3);
    std::vector<Node> nodes_;
};

} // namespace bodyfit
