#include "clutterfit/geometry.hpp"

#include "clutterfit/random.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace clutterfit {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::EmptyInput: return "empty input";
        case ErrorKind::InvalidArgument: return "invalid argument";
        case ErrorKind::DegenerateGeometry: return "degenerate geometry";
        case ErrorKind::ShapeMismatch: return "shape mismatch";
        case ErrorKind::TopologyMismatch: return "topology mismatch";
        case ErrorKind::PlacementFailure: return "placement failure";
        case ErrorKind::ZeroDenominator: return "zero denominator";
        case ErrorKind::Io: return "i/o error";
        case ErrorKind::Data: return "data error";
    }
    return "error";
}

namespace {
constexpr double kMinTriangleArea = 1e-12;
}

void PointCloud::validate() const {
    if (!points.allFinite()) {
        throw Error(ErrorKind::InvalidArgument, "point cloud has non-finite coordinates");
    }
    if (!labels.empty() && labels.size() != size()) {
        throw Error(ErrorKind::InvalidArgument, "label count does not match point count");
    }
    if (!view_ids.empty() && view_ids.size() != size()) {
        throw Error(ErrorKind::InvalidArgument, "view id count does not match point count");
    }
}

void PointCloud::append(const PointCloud& other) {
    const bool keep_labels = (empty() || has_labels()) && other.has_labels();
    const bool keep_views = (empty() || has_view_ids()) && other.has_view_ids();
    const Eigen::Index n0 = points.cols();
    points.conservativeResize(3, n0 + other.points.cols());
    points.rightCols(other.points.cols()) = other.points;
    if (keep_labels) {
        labels.insert(labels.end(), other.labels.begin(), other.labels.end());
    } else {
        labels.clear();
    }
    if (keep_views) {
        view_ids.insert(view_ids.end(), other.view_ids.begin(), other.view_ids.end());
    } else {
        view_ids.clear();
    }
}

PointCloud PointCloud::select(const std::vector<std::size_t>& indices) const {
    PointCloud out;
    out.points.resize(3, static_cast<Eigen::Index>(indices.size()));
    for (std::size_t i = 0; i < indices.size(); ++i) {
        out.points.col(static_cast<Eigen::Index>(i)) = points.col(static_cast<Eigen::Index>(indices[i]));
    }
    if (has_labels()) {
        out.labels.reserve(indices.size());
        for (auto i : indices) out.labels.push_back(labels[i]);
    }
    if (has_view_ids()) {
        out.view_ids.reserve(indices.size());
        for (auto i : indices) out.view_ids.push_back(view_ids[i]);
    }
    return out;
}

double TriangleMesh::triangle_area(Eigen::Index t) const {
    const Vector3d a = vertices.col(triangles(0, t));
    const Vector3d b = vertices.col(triangles(1, t));
    const Vector3d c = vertices.col(triangles(2, t));
    return 0.5 * (b - a).cross(c - a).norm();
}

double TriangleMesh::surface_area() const {
    double total = 0.0;
    for (Eigen::Index t = 0; t < triangles.cols(); ++t) total += triangle_area(t);
    return total;
}

void TriangleMesh::validate() const {
    if (!vertices.allFinite()) {
        throw Error(ErrorKind::InvalidArgument, "mesh has non-finite vertices");
    }
    for (Eigen::Index t = 0; t < triangles.cols(); ++t) {
        const Eigen::Vector3i tri = triangles.col(t);
        if ((tri.array() < 0).any() || (tri.array() >= vertices.cols()).any()) {
            throw Error(ErrorKind::InvalidArgument,
                        "triangle " + std::to_string(t) + " indexes outside the vertex list");
        }
        if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) {
            throw Error(ErrorKind::InvalidArgument,
                        "triangle " + std::to_string(t) + " repeats a vertex");
        }
        if (triangle_area(t) <= kMinTriangleArea) {
            throw Error(ErrorKind::DegenerateGeometry,
                        "triangle " + std::to_string(t) + " has zero area");
        }
    }
}

RigidPose RigidPose::from_yaw(double yaw, const Vector3d& translation) {
    RigidPose pose;
    pose.rotation = Eigen::AngleAxisd(yaw, Vector3d::UnitZ()).toRotationMatrix();
    pose.translation = translation;
    return pose;
}

RigidPose RigidPose::inverse() const {
    RigidPose inv;
    inv.rotation = rotation.transpose();
    inv.translation = -(inv.rotation * translation);
    return inv;
}

void RigidPose::validate() const {
    constexpr double tol = 1e-9;
    if (!rotation.allFinite() || !translation.allFinite()) {
        throw Error(ErrorKind::InvalidArgument, "pose has non-finite entries");
    }
    if (!(rotation.transpose() * rotation).isApprox(Eigen::Matrix3d::Identity(), tol) ||
        std::abs(rotation.determinant() - 1.0) > tol) {
        throw Error(ErrorKind::InvalidArgument, "pose rotation is not a proper rotation");
    }
}

Neighbor<double> nearest_neighbor(const Vector3d& query, const PointCloud& cloud) {
    if (cloud.empty()) throw Error(ErrorKind::EmptyInput, "nearest_neighbor: empty cloud");
    Neighbor<double> best;
    for (Eigen::Index i = 0; i < cloud.points.cols(); ++i) {
        const double d = (query - cloud.points.col(i)).squaredNorm();
        if (d < best.squared_distance) {
            best.index = static_cast<std::size_t>(i);
            best.squared_distance = d;
        }
    }
    return best;
}

double chamfer_distance(const PointCloud& a, const PointCloud& b) {
    return chamfer_distance<double>(a.points, b.points);
}

Aabb aabb_of(const Matrix3Xd& points) {
    if (points.cols() == 0) throw Error(ErrorKind::EmptyInput, "aabb_of: empty cloud");
    return Aabb{points.rowwise().minCoeff(), points.rowwise().maxCoeff()};
}

Aabb aabb_of(const PointCloud& cloud) { return aabb_of(cloud.points); }

namespace {
double intersection_volume(const Aabb& a, const Aabb& b) {
    const Vector3d lo = a.min.cwiseMax(b.min);
    const Vector3d hi = a.max.cwiseMin(b.max);
    return (hi - lo).cwiseMax(0.0).prod();
}
}  // namespace

double aabb_iou(const Aabb& a, const Aabb& b) {
    const double va = a.volume();
    const double vb = b.volume();
    if (va <= 0.0 || vb <= 0.0) return 0.0;
    const double inter = intersection_volume(a, b);
    const double uni = va + vb - inter;
    return uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

double aabb_overlap_ratio(const Aabb& a, const Aabb& b) {
    const double smaller = std::min(a.volume(), b.volume());
    if (smaller <= 0.0) return 0.0;
    return intersection_volume(a, b) / smaller;
}

PointCloud apply_pose(const PointCloud& cloud, const RigidPose& pose) {
    PointCloud out = cloud;
    out.points = pose.apply(cloud.points);
    return out;
}

PointCloud sample_mesh_surface(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw Error(ErrorKind::InvalidArgument, "sample_mesh_surface: n must be positive");
    const Eigen::Index tris = mesh.triangles.cols();
    std::vector<double> cumulative(static_cast<std::size_t>(tris));
    double total = 0.0;
    for (Eigen::Index t = 0; t < tris; ++t) {
        total += mesh.triangle_area(t);
        cumulative[static_cast<std::size_t>(t)] = total;
    }
    if (!(total > kMinTriangleArea)) {
        throw Error(ErrorKind::DegenerateGeometry, "sample_mesh_surface: mesh has no area");
    }

    Rng rng(seed);
    PointCloud out;
    out.points.resize(3, static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const double pick = rng.uniform() * total;
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
        if (it == cumulative.end()) --it;
        const auto t = static_cast<Eigen::Index>(it - cumulative.begin());
        const double s = std::sqrt(rng.uniform());
        const double r = rng.uniform();
        const Vector3d a = mesh.vertices.col(mesh.triangles(0, t));
        const Vector3d b = mesh.vertices.col(mesh.triangles(1, t));
        const Vector3d c = mesh.vertices.col(mesh.triangles(2, t));
        out.points.col(static_cast<Eigen::Index>(i)) = (1.0 - s) * a + s * (1.0 - r) * b + s * r * c;
    }
    return out;
}

}  // namespace clutterfit
