#pragma once

#include "clutterfit/geometry.hpp"

#include <string>
#include <vector>

namespace clutterfit {

/// Box-cage deformation: anisotropic scale followed by a vertical taper.
/// The taper multiplies x and y by 1 + epsilon * t, where t runs from 0 on
/// the bottom layer to 1 on the top layer.
struct DeformationParams {
    static constexpr double kMinScale = 0.2;
    static constexpr double kMaxScale = 5.0;
    static constexpr double kMinTaper = -0.9;  // exclusive
    static constexpr double kMaxTaper = 2.0;

    double alpha_x = 1.0;
    double alpha_y = 1.0;
    double alpha_z = 1.0;
    double epsilon = 0.0;

    static DeformationParams identity() { return {}; }

    Vector3d alpha() const { return {alpha_x, alpha_y, alpha_z}; }
    Eigen::Vector4d as_vector() const { return {alpha_x, alpha_y, alpha_z, epsilon}; }
    static DeformationParams from_vector(const Eigen::Vector4d& v) { return {v[0], v[1], v[2], v[3]}; }

    bool within_bounds() const;
    void validate() const;

    friend bool operator==(const DeformationParams&, const DeformationParams&) = default;
};

/// Canonical category shape: z up, vertex centroid at the origin.
struct CategoryTemplate {
    std::string category;
    TriangleMesh mesh;

    void validate() const;
};

template <typename Scalar>
struct TaperResult {
    Matrix3X<Scalar> vertices;
    bool flat = false;  // vertical extent too small; vertices returned unchanged
};

/// (x, y, z) -> (ax x, ay y, az z).
template <typename Derived>
Matrix3X<typename Derived::Scalar> apply_scale(const Eigen::MatrixBase<Derived>& vertices,
                                               const Vector3<typename Derived::Scalar>& alpha) {
    static_assert(Derived::RowsAtCompileTime == 3, "vertices must be 3xN");
    if ((alpha.array() <= 0).any()) {
        throw Error(ErrorKind::InvalidArgument, "apply_scale: scale factors must be positive");
    }
    return alpha.asDiagonal() * vertices;
}

/// Vertical taper. The bottom and top layers are the min and max z of the
/// input vertices.
template <typename Derived>
TaperResult<typename Derived::Scalar> apply_surface(const Eigen::MatrixBase<Derived>& vertices,
                                                    typename Derived::Scalar epsilon) {
    static_assert(Derived::RowsAtCompileTime == 3, "vertices must be 3xN");
    using Scalar = typename Derived::Scalar;
    TaperResult<Scalar> out{vertices, false};
    if (vertices.cols() == 0) return out;
    const Scalar bottom = vertices.row(2).minCoeff();
    const Scalar top = vertices.row(2).maxCoeff();
    const Scalar extent = top - bottom;
    if (!(extent > Scalar(1e-9))) {
        out.flat = true;
        return out;
    }
    for (Eigen::Index i = 0; i < out.vertices.cols(); ++i) {
        const Scalar t = (out.vertices(2, i) - bottom) / extent;
        const Scalar factor = Scalar(1) + epsilon * t;
        out.vertices(0, i) *= factor;
        out.vertices(1, i) *= factor;
    }
    return out;
}

/// Scale first, then taper; triangles are copied from the template.
TriangleMesh deform_template(const CategoryTemplate& tmpl, const DeformationParams& params);

PointCloud predict_shape(const CategoryTemplate& tmpl, const DeformationParams& params, std::size_t n,
                         std::uint64_t seed);

/// Vertexwise mean of meshes that share one topology.
CategoryTemplate mean_template(const std::string& category, const std::vector<TriangleMesh>& meshes);

}  // namespace clutterfit
