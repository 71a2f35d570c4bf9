#pragma once

#include "clutterfit/geometry.hpp"
#include "clutterfit/random.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace clutterfit::testing {

inline PointCloud cloud_of(std::initializer_list<Vector3d> pts) {
    Matrix3Xd m(3, static_cast<Eigen::Index>(pts.size()));
    Eigen::Index i = 0;
    for (const auto& p : pts) m.col(i++) = p;
    return PointCloud(m);
}

inline Matrix3Xd random_points(Rng& rng, Eigen::Index n, double scale = 1.0) {
    Matrix3Xd m(3, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int r = 0; r < 3; ++r) m(r, i) = rng.uniform(-scale, scale);
    }
    return m;
}

// All-pairs reference for the Chamfer distance.
inline double brute_directed(const Matrix3Xd& from, const Matrix3Xd& to) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < from.cols(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < to.cols(); ++j) best = std::min(best, (from.col(i) - to.col(j)).squaredNorm());
        sum += best;
    }
    return sum / static_cast<double>(from.cols());
}

inline double brute_chamfer(const Matrix3Xd& a, const Matrix3Xd& b) {
    return brute_directed(a, b) + brute_directed(b, a);
}

inline TriangleMesh unit_cube() {
    TriangleMesh m;
    m.vertices.resize(3, 8);
    for (int i = 0; i < 8; ++i) m.vertices.col(i) = Vector3d(i & 1, (i >> 1) & 1, (i >> 2) & 1);
    m.triangles.resize(3, 12);
    m.triangles << 0, 0, 4, 4, 0, 0, 2, 2, 0, 0, 1, 1,  //
        2, 3, 5, 7, 1, 5, 3, 7, 4, 6, 5, 7,             //
        3, 1, 7, 6, 5, 4, 7, 6, 6, 2, 7, 3;
    return m;
}

// Largest one-to-one same-category assignment with IoU >= t, by exhaustive search.
inline int optimal_match_count(const Eigen::MatrixXd& iou, const std::vector<std::string>& pc,
                               const std::vector<std::string>& gc, double t) {
    std::vector<bool> used(static_cast<std::size_t>(iou.cols()), false);
    std::function<int(Eigen::Index)> best = [&](Eigen::Index p) -> int {
        if (p == iou.rows()) return 0;
        int out = best(p + 1);
        for (Eigen::Index g = 0; g < iou.cols(); ++g) {
            const auto gu = static_cast<std::size_t>(g);
            if (used[gu] || pc[static_cast<std::size_t>(p)] != gc[gu] || iou(p, g) + 1e-9 < t) continue;
            used[gu] = true;
            out = std::max(out, 1 + best(p + 1));
            used[gu] = false;
        }
        return out;
    };
    return best(0);
}

}  // namespace clutterfit::testing
