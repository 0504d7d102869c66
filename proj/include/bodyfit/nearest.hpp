#pragma once

#include "mesh.hpp"

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/point.hpp>
#include <boost/geometry/index/rtree.hpp>

#include <iterator>
#include <utility>
#include <vector>

namespace bodyfit {

/// Static nearest-neighbour index over a point set.
class PointIndex {
public:
    explicit PointIndex(const Points& P)
    {
        std::vector<Value> values;
        values.reserve(static_cast<std::size_t>(P.rows()));
        for (Eigen::Index i = 0; i < P.rows(); ++i) values.emplace_back(Point(P(i, 0), P(i, 1), P(i, 2)), i);
        tree_ = Tree(values.begin(), values.end());  // packing construction, deterministic
    }

    /// Index of a nearest point to q.
    Eigen::Index nearest(const Eigen::Vector3d& q) const
    {
        std::vector<Value> hit;
        hit.reserve(1);
        tree_.query(boost::geometry::index::nearest(Point(q[0], q[1], q[2]), 1), std::back_inserter(hit));
        return hit.empty() ? -1 : hit.front().second;
    }

private:
    using Point = boost::geometry::model::point<double, 3, boost::geometry::cs::cartesian>;
    using Value = std::pair<Point, Eigen::Index>;
    using Tree = boost::geometry::index::rtree<Value, boost::geometry::index::quadratic<16>>;
    Tree tree_;
};

} // namespace bodyfit
