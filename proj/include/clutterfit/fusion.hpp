#pragma once

#include "clutterfit/scene.hpp"

#include <cmath>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace clutterfit {

/// Labeled subset of the fused cloud. `indices` are positions in the fused
/// cloud; `points` holds the matching coordinates.
struct Partition {
    std::vector<std::size_t> indices;
    PointCloud points;
    std::string category;
    std::set<int> source_views;
    int merge_id = 0;

    std::size_t size() const { return indices.size(); }
};

/// Projects every point of one view through its camera and groups points by
/// the mask they land in. Points outside all masks are discarded.
/// `index_offset` is the position of the view's first point in the fused cloud.
std::vector<Partition> assign_labels(const PointCloud& view_cloud, const ViewMasks& masks, const CameraModel& camera,
                                     int view, std::size_t index_offset = 0);

/// Iterative cross-view mergence. Each pass visits surviving partitions in
/// ascending merge id; the visitor absorbs every other surviving partition of
/// its category whose Chamfer distance to it (as of the start of its turn) is
/// below `h`. Passes repeat until nothing is enlarged.
std::vector<Partition> merge_partitions(std::vector<Partition> partitions, double h);

// ---------------------------------------------------------------------------
// Affinity algebra

inline constexpr double kAffinityClamp = 1e-7;

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
struct FusedFeatures {
    DenseMatrix<Scalar> intra;  // A F
    DenseMatrix<Scalar> inter;  // (1 - A) F
    DenseMatrix<Scalar> fused;  // [F | intra | inter]
};

template <typename DerivedA, typename DerivedF>
FusedFeatures<typename DerivedF::Scalar> fuse_features(const Eigen::MatrixBase<DerivedA>& affinity,
                                                       const Eigen::MatrixBase<DerivedF>& features) {
    using Scalar = typename DerivedF::Scalar;
    if (affinity.rows() != affinity.cols() || affinity.cols() != features.rows()) {
        throw Error(ErrorKind::ShapeMismatch, "fuse_features: affinity must be NxN and features NxC");
    }
    const Eigen::Index n = affinity.rows();
    const Eigen::Index c = features.cols();
    FusedFeatures<Scalar> out;
    out.intra = affinity.template cast<Scalar>() * features;
    out.inter = (DenseMatrix<Scalar>::Ones(n, n) - affinity.template cast<Scalar>()) * features;
    out.fused.resize(n, 3 * c);
    out.fused << features, out.intra, out.inter;
    return out;
}

/// Binary same-instance matrix.
template <typename Label>
Eigen::MatrixXd affinity_from_labels(std::span<const Label> labels) {
    if (labels.empty()) throw Error(ErrorKind::EmptyInput, "affinity_from_labels: no labels");
    const auto n = static_cast<Eigen::Index>(labels.size());
    Eigen::MatrixXd a(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            a(i, j) = labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)] ? 1.0 : 0.0;
        }
    }
    return a;
}

struct PrsTerms {
    double precision = 0.0;    // L_p
    double recall = 0.0;       // L_r
    double specificity = 0.0;  // L_s
};

namespace detail {
void check_affinity_pair(std::span<const Eigen::MatrixXd> predicted, std::span<const Eigen::MatrixXd> truth);
}

/// Mean binary cross-entropy over K views of N x N entries; predictions are
/// clamped to [1e-7, 1 - 1e-7].
double affinity_bce(std::span<const Eigen::MatrixXd> predicted, std::span<const Eigen::MatrixXd> truth);

/// View-averaged log precision, recall and specificity of the affinities.
PrsTerms affinity_prs(std::span<const Eigen::MatrixXd> predicted, std::span<const Eigen::MatrixXd> truth);

/// L_ce - lambda (L_p + L_r + L_s).
double seg_objective(std::span<const Eigen::MatrixXd> predicted, std::span<const Eigen::MatrixXd> truth,
                     double lambda);

}  // namespace clutterfit
