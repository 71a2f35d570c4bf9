#pragma once

#include "clutterfit/fusion.hpp"

#include <span>
#include <string>
#include <vector>

namespace clutterfit {

struct ThresholdScore {
    double threshold = 0.0;
    double precision = 0.0;
    double recall = 0.0;
};

struct InstanceMatch {
    int pred = 0;
    int gt = 0;
    double iou = 0.0;
};

struct MatchReport {
    std::vector<ThresholdScore> sweep;  // averaged into mean_precision / mean_recall
    std::vector<ThresholdScore> cuts;   // individually reported columns
    double mean_precision = 0.0;        // mAP
    double mean_recall = 0.0;           // mAR
    double f1 = 0.0;                    // harmonic mean of mAP and mAR
    std::vector<InstanceMatch> matches; // at the first sweep threshold

    /// Score at a threshold from either list; throws if absent.
    const ThresholdScore& at(double threshold) const;
};

/// Mask IoU thresholds 0.50:0.05:0.95.
std::vector<double> mask_iou_sweep();
/// Scene box IoU thresholds 0.10:0.05:0.55.
std::vector<double> scene_iou_sweep();

/// |pred ∩ gt| / |pred ∪ gt| over fused-cloud point indices.
double point_mask_iou(const Partition& pred, const Partition& gt);

/// Greedy one-to-one same-category matching. Predictions are visited in the
/// given order and take the unmatched ground truth with the highest IoU at or
/// above the threshold (lowest index on ties).
std::vector<InstanceMatch> greedy_match(const Eigen::MatrixXd& iou, std::span<const int> pred_order,
                                        std::span<const std::string> pred_categories,
                                        std::span<const std::string> gt_categories, double threshold);

/// Builds a report from an IoU table. `pred_order` is the greedy visiting order.
MatchReport match_report(const Eigen::MatrixXd& iou, std::span<const int> pred_order,
                         std::span<const std::string> pred_categories, std::span<const std::string> gt_categories,
                         std::span<const double> sweep, std::span<const double> cuts);

/// Point-mask mAP/mAR over the mask sweep, plus AP_25 and AP_50 columns.
/// Predictions are visited largest first (ties by merge id).
MatchReport segmentation_map(std::span<const Partition> preds, std::span<const Partition> gts);

/// Chamfer distance between a prediction and `n` samples of the true mesh.
double shape_cd(const PointCloud& predicted, const TriangleMesh& gt_mesh, std::size_t n, std::uint64_t seed);

struct PlacedShape {
    int label = 0;
    const CategoryTemplate* tmpl = nullptr;
    DeformationParams params;
    RigidPose pose;
};

/// Union of posed predicted shapes, each sampled with `n` points and labeled.
PointCloud reconstruct_scene(std::span<const PlacedShape> shapes, std::size_t n, std::uint64_t seed);

struct BoxInstance {
    Aabb box;
    std::string category;
};

/// Box-IoU precision/recall over `thresholds` (default: the scene sweep),
/// with AP_10, AP_25 and AP_50 columns. Larger boxes are matched first.
MatchReport scene_pr(std::span<const BoxInstance> preds, std::span<const BoxInstance> gts,
                     std::span<const double> thresholds = {});

/// Per-label AABBs of a labeled cloud, keyed in ascending label order.
std::vector<std::pair<int, Aabb>> boxes_by_label(const PointCloud& cloud);

std::string match_report_to_json(const MatchReport& report);

}  // namespace clutterfit
