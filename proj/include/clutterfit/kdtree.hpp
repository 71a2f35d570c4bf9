#pragma once

#include "clutterfit/common.hpp"

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

namespace clutterfit {

template <typename Scalar>
struct Neighbor {
    std::size_t index = 0;
    Scalar squared_distance = std::numeric_limits<Scalar>::infinity();
};

/// Static 3-d tree over a column-major point matrix. Queries return the exact
/// nearest neighbor; among equidistant points the smallest index wins, so the
/// result matches a linear scan bit for bit.
template <typename Scalar>
class KdTree {
public:
    static constexpr std::size_t kLeafSize = 8;

    KdTree() = default;

    explicit KdTree(Matrix3X<Scalar> points) : points_(std::move(points)) {
        const auto n = static_cast<std::size_t>(points_.cols());
        order_.resize(n);
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        if (n > 0) {
            nodes_.reserve(2 * n / kLeafSize + 1);
            build(0, n);
        }
    }

    std::size_t size() const { return order_.size(); }
    bool empty() const { return order_.empty(); }
    const Matrix3X<Scalar>& points() const { return points_; }

    Neighbor<Scalar> nearest(const Vector3<Scalar>& query) const {
        Neighbor<Scalar> best;
        if (!nodes_.empty()) search(0, query, best);
        return best;
    }

private:
    struct Node {
        std::size_t begin, end;   // range in order_
        int axis = -1;            // -1 for leaves
        Scalar split = 0;
        std::size_t left = 0, right = 0;
    };

    std::size_t build(std::size_t begin, std::size_t end) {
        const std::size_t id = nodes_.size();
        nodes_.push_back(Node{begin, end});
        if (end - begin <= kLeafSize) return id;

        Vector3<Scalar> lo = Vector3<Scalar>::Constant(std::numeric_limits<Scalar>::infinity());
        Vector3<Scalar> hi = -lo;
        for (std::size_t i = begin; i < end; ++i) {
            lo = lo.cwiseMin(points_.col(order_[i]));
            hi = hi.cwiseMax(points_.col(order_[i]));
        }
        int axis;
        (hi - lo).maxCoeff(&axis);
        if (hi[axis] == lo[axis]) return id;  // all points coincide

        const std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](std::size_t a, std::size_t b) {
                             return points_(axis, a) < points_(axis, b);
                         });
        const Scalar split = points_(axis, order_[mid]);
        const std::size_t left = build(begin, mid);
        const std::size_t right = build(mid, end);
        Node& node = nodes_[id];
        node.axis = axis;
        node.split = split;
        node.left = left;
        node.right = right;
        return id;
    }

    void search(std::size_t id, const Vector3<Scalar>& q, Neighbor<Scalar>& best) const {
        const Node& node = nodes_[id];
        if (node.axis < 0) {
            for (std::size_t i = node.begin; i < node.end; ++i) {
                const std::size_t idx = order_[i];
                const Scalar d = (q - points_.col(idx)).squaredNorm();
                if (d < best.squared_distance || (d == best.squared_distance && idx < best.index)) {
                    best.index = idx;
                    best.squared_distance = d;
                }
            }
            return;
        }
        // left holds coordinates <= split, right holds >= split
        const Scalar diff = q[node.axis] - node.split;
        const std::size_t near = diff <= 0 ? node.left : node.right;
        const std::size_t far = diff <= 0 ? node.right : node.left;
        search(near, q, best);
        // slack covers rounding between diff^2 and the computed squared norm
        const Scalar slack = 1 + 16 * std::numeric_limits<Scalar>::epsilon();
        if (diff * diff <= best.squared_distance * slack) search(far, q, best);
    }

    Matrix3X<Scalar> points_;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
};

}  // namespace clutterfit
