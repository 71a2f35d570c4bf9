#pragma once

#include "clutterfit/common.hpp"
#include "clutterfit/kdtree.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace clutterfit {

/// Ordered 3-d points in meters, optionally tagged with an instance label and
/// the index of the camera that observed each point.
struct PointCloud {
    Matrix3Xd points;
    std::vector<std::int32_t> labels;    // empty, or one per point
    std::vector<std::int32_t> view_ids;  // empty, or one per point

    PointCloud() = default;
    explicit PointCloud(Matrix3Xd pts) : points(std::move(pts)) {}

    std::size_t size() const { return static_cast<std::size_t>(points.cols()); }
    bool empty() const { return points.cols() == 0; }
    bool has_labels() const { return !labels.empty(); }
    bool has_view_ids() const { return !view_ids.empty(); }

    /// Throws if a coordinate is non-finite or a per-point array has the wrong length.
    void validate() const;

    /// Appends all points of `other`; per-point arrays are kept only if both sides carry them.
    void append(const PointCloud& other);

    /// Subset by point index, preserving per-point arrays.
    PointCloud select(const std::vector<std::size_t>& indices) const;
};

struct TriangleMesh {
    Matrix3Xd vertices;
    Eigen::Matrix3Xi triangles;

    std::size_t vertex_count() const { return static_cast<std::size_t>(vertices.cols()); }
    std::size_t triangle_count() const { return static_cast<std::size_t>(triangles.cols()); }

    double triangle_area(Eigen::Index t) const;
    double surface_area() const;

    /// Index range, repeated index and zero-area checks.
    void validate() const;
};

struct Aabb {
    Vector3d min = Vector3d::Zero();
    Vector3d max = Vector3d::Zero();

    double volume() const { return (max - min).cwiseMax(0.0).prod(); }
    Vector3d center() const { return 0.5 * (min + max); }
    Vector3d extent() const { return max - min; }
    bool valid() const { return (min.array() <= max.array()).all(); }
};

struct RigidPose {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Vector3d translation = Vector3d::Zero();

    static RigidPose identity() { return {}; }
    /// Rotation about +z by `yaw` radians followed by a translation.
    static RigidPose from_yaw(double yaw, const Vector3d& translation);

    RigidPose inverse() const;
    void validate() const;

    template <typename Derived>
    Matrix3Xd apply(const Eigen::MatrixBase<Derived>& points) const {
        return (rotation * points).colwise() + translation;
    }
};

// ---------------------------------------------------------------------------
// Nearest neighbors and Chamfer distance

/// Linear scan; smallest index wins ties.
Neighbor<double> nearest_neighbor(const Vector3d& query, const PointCloud& cloud);

/// Mean over `from` of the squared distance to the nearest point in `tree`.
template <typename Scalar, typename Derived>
Scalar directed_chamfer(const Eigen::MatrixBase<Derived>& from, const KdTree<Scalar>& tree) {
    Scalar sum = 0;
    for (Eigen::Index i = 0; i < from.cols(); ++i) {
        sum += tree.nearest(from.col(i)).squared_distance;
    }
    return sum / static_cast<Scalar>(from.cols());
}

/// Symmetric Chamfer distance: sum of the two directed mean squared
/// nearest-neighbor distances (m^2).
template <typename Scalar>
Scalar chamfer_distance(const Matrix3X<Scalar>& a, const Matrix3X<Scalar>& b) {
    if (a.cols() == 0 || b.cols() == 0) {
        throw Error(ErrorKind::EmptyInput, "chamfer_distance: empty point cloud");
    }
    const KdTree<Scalar> tree_a(a);
    const KdTree<Scalar> tree_b(b);
    return directed_chamfer(a, tree_b) + directed_chamfer(b, tree_a);
}

double chamfer_distance(const PointCloud& a, const PointCloud& b);

// ---------------------------------------------------------------------------
// Boxes, poses, sampling

Aabb aabb_of(const PointCloud& cloud);
Aabb aabb_of(const Matrix3Xd& points);

/// Intersection over union; 0 for disjoint or zero-volume boxes.
double aabb_iou(const Aabb& a, const Aabb& b);

/// Intersection volume divided by the smaller box volume.
double aabb_overlap_ratio(const Aabb& a, const Aabb& b);

PointCloud apply_pose(const PointCloud& cloud, const RigidPose& pose);

/// Area-weighted triangle choice plus uniform barycentric draw, `n` points.
PointCloud sample_mesh_surface(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed);

}  // namespace clutterfit
