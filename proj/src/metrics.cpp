#include "clutterfit/metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace clutterfit {
namespace {

constexpr double kThresholdSlack = 1e-9;

bool same_threshold(double a, double b) { return std::abs(a - b) < 1e-9; }

std::vector<double> linear_sweep(double first, double step, int count) {
    std::vector<double> out;
    for (int i = 0; i < count; ++i) out.push_back(std::round((first + step * i) * 1e6) / 1e6);
    return out;
}

ThresholdScore score(const Eigen::MatrixXd& iou, std::span<const int> order, std::span<const std::string> pc,
                     std::span<const std::string> gc, double threshold) {
    const auto n_pred = static_cast<double>(iou.rows());
    const auto n_gt = static_cast<double>(iou.cols());
    const auto matched = static_cast<double>(greedy_match(iou, order, pc, gc, threshold).size());
    ThresholdScore s{threshold, 0.0, 0.0};
    if (n_pred == 0.0) {
        s.precision = n_gt == 0.0 ? 1.0 : 0.0;
    } else {
        s.precision = matched / n_pred;
    }
    s.recall = n_gt == 0.0 ? 1.0 : matched / n_gt;
    return s;
}

}  // namespace

const ThresholdScore& MatchReport::at(double threshold) const {
    for (const auto& s : cuts) {
        if (same_threshold(s.threshold, threshold)) return s;
    }
    for (const auto& s : sweep) {
        if (same_threshold(s.threshold, threshold)) return s;
    }
    throw Error(ErrorKind::InvalidArgument, "report has no threshold " + std::to_string(threshold));
}

std::vector<double> mask_iou_sweep() { return linear_sweep(0.5, 0.05, 10); }
std::vector<double> scene_iou_sweep() { return linear_sweep(0.1, 0.05, 10); }

double point_mask_iou(const Partition& pred, const Partition& gt) {
    std::vector<std::size_t> a = pred.indices, b = gt.indices;
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    std::size_t inter = 0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia < *ib) {
            ++ia;
        } else if (*ib < *ia) {
            ++ib;
        } else {
            ++inter;
            ++ia;
            ++ib;
        }
    }
    const std::size_t uni = a.size() + b.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<InstanceMatch> greedy_match(const Eigen::MatrixXd& iou, std::span<const int> pred_order,
                                        std::span<const std::string> pred_categories,
                                        std::span<const std::string> gt_categories, double threshold) {
    std::vector<bool> taken(static_cast<std::size_t>(iou.cols()), false);
    std::vector<InstanceMatch> out;
    for (int p : pred_order) {
        int best = -1;
        double best_iou = -1.0;
        for (Eigen::Index g = 0; g < iou.cols(); ++g) {
            const auto gu = static_cast<std::size_t>(g);
            if (taken[gu] || pred_categories[static_cast<std::size_t>(p)] != gt_categories[gu]) continue;
            const double v = iou(p, g);
            if (v + kThresholdSlack >= threshold && v > best_iou) {
                best = static_cast<int>(g);
                best_iou = v;
            }
        }
        if (best >= 0) {
            taken[static_cast<std::size_t>(best)] = true;
            out.push_back({p, best, best_iou});
        }
    }
    return out;
}

MatchReport match_report(const Eigen::MatrixXd& iou, std::span<const int> pred_order,
                         std::span<const std::string> pred_categories, std::span<const std::string> gt_categories,
                         std::span<const double> sweep, std::span<const double> cuts) {
    if (sweep.empty()) throw Error(ErrorKind::InvalidArgument, "empty threshold sweep");
    if (!std::is_sorted(sweep.begin(), sweep.end())) {
        throw Error(ErrorKind::InvalidArgument, "thresholds must be sorted ascending");
    }
    MatchReport report;
    for (double t : sweep) report.sweep.push_back(score(iou, pred_order, pred_categories, gt_categories, t));
    for (double t : cuts) report.cuts.push_back(score(iou, pred_order, pred_categories, gt_categories, t));
    for (const auto& s : report.sweep) {
        report.mean_precision += s.precision;
        report.mean_recall += s.recall;
    }
    report.mean_precision /= static_cast<double>(report.sweep.size());
    report.mean_recall /= static_cast<double>(report.sweep.size());
    const double sum = report.mean_precision + report.mean_recall;
    report.f1 = sum > 0.0 ? 2.0 * report.mean_precision * report.mean_recall / sum : 0.0;
    report.matches = greedy_match(iou, pred_order, pred_categories, gt_categories, sweep.front());
    return report;
}

MatchReport segmentation_map(std::span<const Partition> preds, std::span<const Partition> gts) {
    Eigen::MatrixXd iou(static_cast<Eigen::Index>(preds.size()), static_cast<Eigen::Index>(gts.size()));
    for (std::size_t p = 0; p < preds.size(); ++p) {
        for (std::size_t g = 0; g < gts.size(); ++g) {
            iou(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(g)) = point_mask_iou(preds[p], gts[g]);
        }
    }
    std::vector<int> order(preds.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        const auto& pa = preds[static_cast<std::size_t>(a)];
        const auto& pb = preds[static_cast<std::size_t>(b)];
        if (pa.size() != pb.size()) return pa.size() > pb.size();
        return pa.merge_id < pb.merge_id;
    });
    std::vector<std::string> pc, gc;
    for (const auto& p : preds) pc.push_back(p.category);
    for (const auto& g : gts) gc.push_back(g.category);
    const auto sweep = mask_iou_sweep();
    const std::vector<double> cuts{0.25, 0.5};
    return match_report(iou, order, pc, gc, sweep, cuts);
}

double shape_cd(const PointCloud& predicted, const TriangleMesh& gt_mesh, std::size_t n, std::uint64_t seed) {
    return chamfer_distance(predicted, sample_mesh_surface(gt_mesh, n, seed));
}

PointCloud reconstruct_scene(std::span<const PlacedShape> shapes, std::size_t n, std::uint64_t seed) {
    PointCloud out;
    out.labels.clear();
    bool first = true;
    for (const PlacedShape& s : shapes) {
        if (s.tmpl == nullptr) throw Error(ErrorKind::InvalidArgument, "reconstruct_scene: missing template");
        s.pose.validate();
        PointCloud part = apply_pose(
            predict_shape(*s.tmpl, s.params, n, derive_seed(seed, stage::reconstruct, static_cast<std::uint64_t>(s.label))),
            s.pose);
        part.labels.assign(part.size(), s.label);
        if (first) {
            out = std::move(part);
            first = false;
        } else {
            out.append(part);
        }
    }
    return out;
}

MatchReport scene_pr(std::span<const BoxInstance> preds, std::span<const BoxInstance> gts,
                     std::span<const double> thresholds) {
    const std::vector<double> default_sweep = scene_iou_sweep();
    if (thresholds.empty()) thresholds = default_sweep;
    Eigen::MatrixXd iou(static_cast<Eigen::Index>(preds.size()), static_cast<Eigen::Index>(gts.size()));
    for (std::size_t p = 0; p < preds.size(); ++p) {
        for (std::size_t g = 0; g < gts.size(); ++g) {
            iou(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(g)) = aabb_iou(preds[p].box, gts[g].box);
        }
    }
    std::vector<int> order(preds.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return preds[static_cast<std::size_t>(a)].box.volume() > preds[static_cast<std::size_t>(b)].box.volume();
    });
    std::vector<std::string> pc, gc;
    for (const auto& p : preds) pc.push_back(p.category);
    for (const auto& g : gts) gc.push_back(g.category);
    const std::vector<double> cuts{0.10, 0.25, 0.50};
    return match_report(iou, order, pc, gc, thresholds, cuts);
}

std::vector<std::pair<int, Aabb>> boxes_by_label(const PointCloud& cloud) {
    if (!cloud.has_labels()) throw Error(ErrorKind::InvalidArgument, "boxes_by_label: cloud has no labels");
    std::map<int, Aabb> boxes;
    for (Eigen::Index i = 0; i < cloud.points.cols(); ++i) {
        const int l = cloud.labels[static_cast<std::size_t>(i)];
        const Vector3d p = cloud.points.col(i);
        auto [it, inserted] = boxes.try_emplace(l, Aabb{p, p});
        if (!inserted) {
            it->second.min = it->second.min.cwiseMin(p);
            it->second.max = it->second.max.cwiseMax(p);
        }
    }
    return {boxes.begin(), boxes.end()};
}

std::string match_report_to_json(const MatchReport& report) {
    using Json = nlohmann::ordered_json;
    auto scores = [](const std::vector<ThresholdScore>& list) {
        Json a = Json::array();
        for (const auto& s : list) a.push_back({{"iou", s.threshold}, {"precision", s.precision}, {"recall", s.recall}});
        return a;
    };
    Json matches = Json::array();
    for (const auto& m : report.matches) matches.push_back({{"pred", m.pred}, {"gt", m.gt}, {"iou", m.iou}});
    const Json j{{"mAP", report.mean_precision}, {"mAR", report.mean_recall}, {"F1", report.f1},
                 {"sweep", scores(report.sweep)},   {"cuts", scores(report.cuts)}, {"matches", matches}};
    return j.dump(2);
}

}  // namespace clutterfit
