#include "clutterfit/deform.hpp"

#include <string>

namespace clutterfit {

bool DeformationParams::within_bounds() const {
    const Vector3d a = alpha();
    return a.allFinite() && (a.array() >= kMinScale).all() && (a.array() <= kMaxScale).all() &&
           std::isfinite(epsilon) && epsilon > kMinTaper && epsilon <= kMaxTaper;
}

void DeformationParams::validate() const {
    if (!within_bounds()) {
        throw Error(ErrorKind::InvalidArgument,
                    "deformation parameters out of bounds (alpha in [0.2, 5], epsilon in (-0.9, 2])");
    }
}

void CategoryTemplate::validate() const {
    mesh.validate();
    if (mesh.vertices.cols() == 0) {
        throw Error(ErrorKind::DegenerateGeometry, "template '" + category + "' has no vertices");
    }
    const double extent = mesh.vertices.row(2).maxCoeff() - mesh.vertices.row(2).minCoeff();
    if (!(extent > 1e-9)) {
        throw Error(ErrorKind::DegenerateGeometry, "template '" + category + "' has no vertical extent");
    }
}

TriangleMesh deform_template(const CategoryTemplate& tmpl, const DeformationParams& params) {
    params.validate();
    TriangleMesh out;
    out.vertices = apply_surface(apply_scale(tmpl.mesh.vertices, params.alpha()), params.epsilon).vertices;
    out.triangles = tmpl.mesh.triangles;
    return out;
}

PointCloud predict_shape(const CategoryTemplate& tmpl, const DeformationParams& params, std::size_t n,
                         std::uint64_t seed) {
    return sample_mesh_surface(deform_template(tmpl, params), n, seed);
}

CategoryTemplate mean_template(const std::string& category, const std::vector<TriangleMesh>& meshes) {
    if (meshes.empty()) throw Error(ErrorKind::EmptyInput, "mean_template: no meshes");
    const TriangleMesh& first = meshes.front();
    Matrix3Xd sum = Matrix3Xd::Zero(3, first.vertices.cols());
    for (const TriangleMesh& m : meshes) {
        if (m.vertices.cols() != first.vertices.cols() || m.triangles.cols() != first.triangles.cols() ||
            m.triangles != first.triangles) {
            throw Error(ErrorKind::TopologyMismatch, "mean_template: meshes do not share one topology");
        }
        sum += m.vertices;
    }
    CategoryTemplate out;
    out.category = category;
    out.mesh.vertices = sum / static_cast<double>(meshes.size());
    out.mesh.triangles = first.triangles;
    return out;
}

}  // namespace clutterfit
