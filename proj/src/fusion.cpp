#include "clutterfit/fusion.hpp"

#include <algorithm>
#include <map>
#include <optional>

namespace clutterfit {

std::vector<Partition> assign_labels(const PointCloud& view_cloud, const ViewMasks& masks, const CameraModel& camera,
                                     int view, std::size_t index_offset) {
    if (masks.width != camera.width || masks.height != camera.height) {
        throw Error(ErrorKind::ShapeMismatch, "view " + std::to_string(view) + ": mask size differs from the image");
    }
    for (const Mask& m : masks.masks) {
        if (m.pixels.rows() != masks.height || m.pixels.cols() != masks.width) {
            throw Error(ErrorKind::ShapeMismatch, "view " + std::to_string(view) + ": mask raster has the wrong size");
        }
    }
    std::vector<std::vector<std::size_t>> members(masks.masks.size());
    for (Eigen::Index i = 0; i < view_cloud.points.cols(); ++i) {
        const auto px = camera.project(view_cloud.points.col(i));
        if (!px || px->x >= masks.width || px->y >= masks.height) continue;
        std::optional<std::size_t> hit;
        bool ambiguous = false;
        for (std::size_t m = 0; m < masks.masks.size(); ++m) {
            if (masks.masks[m].pixels(px->y, px->x) != 0) {
                if (hit) ambiguous = true;
                hit = m;
            }
        }
        if (hit && !ambiguous) members[*hit].push_back(static_cast<std::size_t>(i));
    }

    std::vector<Partition> out;
    for (std::size_t m = 0; m < members.size(); ++m) {
        if (members[m].empty()) continue;
        Partition p;
        p.points = view_cloud.select(members[m]);
        p.indices.reserve(members[m].size());
        for (auto i : members[m]) p.indices.push_back(i + index_offset);
        p.category = masks.masks[m].category;
        p.source_views = {view};
        p.merge_id = static_cast<int>(m);
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<Partition> merge_partitions(std::vector<Partition> partitions, double h) {
    if (!(h > 0.0)) throw Error(ErrorKind::InvalidArgument, "merge_partitions: threshold must be positive");
    std::stable_sort(partitions.begin(), partitions.end(),
                     [](const Partition& a, const Partition& b) { return a.merge_id < b.merge_id; });
    for (const Partition& p : partitions) {
        if (p.points.empty()) throw Error(ErrorKind::EmptyInput, "merge_partitions: empty partition");
    }

    const std::size_t n = partitions.size();
    std::vector<bool> alive(n, true);
    std::vector<KdTree<double>> trees;
    trees.reserve(n);
    for (const Partition& p : partitions) trees.emplace_back(p.points.points);

    auto chamfer = [&](std::size_t a, std::size_t b) {
        return directed_chamfer(partitions[a].points.points, trees[b]) +
               directed_chamfer(partitions[b].points.points, trees[a]);
    };

    bool enlarged = true;
    while (enlarged) {
        enlarged = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (!alive[i]) continue;
            std::vector<std::size_t> absorb;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i || !alive[j] || partitions[j].category != partitions[i].category) continue;
                if (chamfer(j, i) < h) absorb.push_back(j);
            }
            if (absorb.empty()) continue;
            Partition& target = partitions[i];
            for (std::size_t j : absorb) {
                Partition& src = partitions[j];
                target.indices.insert(target.indices.end(), src.indices.begin(), src.indices.end());
                target.points.append(src.points);
                target.source_views.insert(src.source_views.begin(), src.source_views.end());
                alive[j] = false;
            }
            trees[i] = KdTree<double>(target.points.points);
            enlarged = true;
        }
    }

    std::vector<Partition> out;
    for (std::size_t i = 0; i < n; ++i) {
        if (alive[i]) out.push_back(std::move(partitions[i]));
    }
    return out;
}

namespace detail {

void check_affinity_pair(std::span<const Eigen::MatrixXd> predicted, std::span<const Eigen::MatrixXd> truth) {
    if (predicted.empty()) throw Error(ErrorKind::EmptyInput, "affinity: no views");
    if (predicted.size() != truth.size()) throw Error(ErrorKind::ShapeMismatch, "affinity: view counts differ");
    const Eigen::Index n = predicted.front().rows();
    for (std::size_t k = 0; k < predicted.size(); ++k) {
        const auto& a = predicted[k];
        const auto& c = truth[k];
        if (a.rows() != n || a.cols() != n || c.rows() != n || c.cols() != n) {
            throw Error(ErrorKind::ShapeMismatch, "affinity: view " + std::to_string(k) + " is not N x N");
        }
    }
}

}  // namespace detail

namespace {

Eigen::ArrayXXd clamped(const Eigen::MatrixXd& a) {
    return a.array().max(kAffinityClamp).min(1.0 - kAffinityClamp);
}

}  // namespace

double affinity_bce(std::span<const Eigen::MatrixXd> predicted, std::span<const Eigen::MatrixXd> truth) {
    detail::check_affinity_pair(predicted, truth);
    const auto n = static_cast<double>(predicted.front().rows());
    double sum = 0.0;
    for (std::size_t k = 0; k < predicted.size(); ++k) {
        const Eigen::ArrayXXd a = clamped(predicted[k]);
        const Eigen::ArrayXXd c = truth[k].array();
        sum += (c * a.log() + (1.0 - c) * (1.0 - a).log()).sum();
    }
    return -sum / (static_cast<double>(predicted.size()) * n * n);
}

PrsTerms affinity_prs(std::span<const Eigen::MatrixXd> predicted, std::span<const Eigen::MatrixXd> truth) {
    detail::check_affinity_pair(predicted, truth);
    PrsTerms out;
    for (std::size_t k = 0; k < predicted.size(); ++k) {
        const Eigen::ArrayXXd a = clamped(predicted[k]);
        const Eigen::ArrayXXd c = truth[k].array();
        const double sum_a = a.sum();
        const double sum_c = c.sum();
        const double sum_not_c = (1.0 - c).sum();
        const std::string where = " in view " + std::to_string(k);
        if (!(sum_a > 0.0)) throw Error(ErrorKind::ZeroDenominator, "precision term: sum of predictions is zero" + where);
        if (!(sum_c > 0.0)) throw Error(ErrorKind::ZeroDenominator, "recall term: sum of truth is zero" + where);
        if (!(sum_not_c > 0.0)) {
            throw Error(ErrorKind::ZeroDenominator, "specificity term: sum of (1 - truth) is zero" + where);
        }
        const double tp = (c * a).sum();
        const double tn = ((1.0 - c) * (1.0 - a)).sum();
        out.precision += std::log(tp / sum_a);
        out.recall += std::log(tp / sum_c);
        out.specificity += std::log(tn / sum_not_c);
    }
    const auto k = static_cast<double>(predicted.size());
    out.precision /= k;
    out.recall /= k;
    out.specificity /= k;
    return out;
}

double seg_objective(std::span<const Eigen::MatrixXd> predicted, std::span<const Eigen::MatrixXd> truth,
                     double lambda) {
    if (!(lambda >= 0.0)) throw Error(ErrorKind::InvalidArgument, "seg_objective: lambda must be non-negative");
    const double ce = affinity_bce(predicted, truth);
    if (lambda == 0.0) return ce;
    const PrsTerms t = affinity_prs(predicted, truth);
    return ce - lambda * (t.precision + t.recall + t.specificity);
}

}  // namespace clutterfit
