#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ispc/gt_encoder.hpp"
#include "ispc/instance_pipeline.hpp"
#include "ispc/raster.hpp"
#include "ispc/scene_model.hpp"

namespace ispc {

// Instance masks of one image in a form shared by predictions and ground
// truth, so that every metric can be evaluated in either direction.
struct InstanceSet {
  struct Info {
    LabelId label = 0;
    double depth_m = 0.0;
    std::optional<double> confidence;
    long long pixels = 0;
  };
  Raster<InstanceId> ids;  // 0 = none
  std::map<InstanceId, Info> instances;

  static InstanceSet from_labeling(const SceneLabeling& labeling);
  // Instance label is the most frequent semantic label under its mask.
  static InstanceSet from_annotation(const InstanceAnnotation& ann);
};

struct InstanceMatching {
  struct Pair {
    InstanceId pred = 0;
    InstanceId gt = 0;
    double overlap = 0.0;  // IoU
  };
  std::vector<Pair> pairs;
  std::vector<InstanceId> unmatched_pred;
  std::vector<InstanceId> unmatched_gt;
};

// Greedy one-to-one matching by descending overlap over the given candidate
// pairs; only overlaps strictly above threshold are accepted. Ties go to the
// lower (pred, gt) ids.
InstanceMatching match_by_overlap(std::vector<InstanceMatching::Pair> candidates,
                                  std::vector<InstanceId> pred_ids, std::vector<InstanceId> gt_ids,
                                  double threshold = 0.5);

// Intersection counts for every overlapping (pred, gt) pair.
std::map<std::pair<InstanceId, InstanceId>, long long> intersections(const InstanceSet& pred,
                                                                     const InstanceSet& gt);

InstanceMatching match_instances(const InstanceSet& pred, const InstanceSet& gt, double threshold = 0.5,
                                 bool same_label_only = false);
InstanceMatching match_instances(const SceneLabeling& pred, const InstanceAnnotation& gt,
                                 double threshold = 0.5);

// All percentages lie in [0, 100].
struct ZhangMetrics {
  double IoU = 0, MWCov = 0, MUCov = 0, AvgPr = 0, AvgRe = 0;
  double AvgFP = 0, AvgFN = 0;
  double InsPr = 0, InsRe = 0, InsF1 = 0;
};

struct ApMetrics {
  double AP = 0, AP50 = 0, AP100m = 0, AP50m = 0;
  std::vector<double> by_threshold;  // AP at 0.50, 0.55, ..., 0.95
};

struct DepthMetrics {
  double MAE_m = 0, RMSE_m = 0, ARD = 0;  // ARD in percent
  double delta1 = 0, delta2 = 0, delta3 = 0;
  std::size_t pairs = 0;
};

struct PixelMetrics {
  std::map<std::string, double> IoU_class;   // per label name, present labels only
  std::map<std::string, double> iIoU_class;  // object labels only
  double mean_IoU = 0;
  double mean_iIoU = 0;
};

struct MetricReport {
  ZhangMetrics zhang;
  ApMetrics ap;
  DepthMetrics depth;
  PixelMetrics pixel;
  std::size_t images = 0;
};

// One evaluated image.
struct EvalCase {
  InstanceSet pred;
  InstanceSet gt;
  Raster<LabelId> pred_semantic;
  Raster<LabelId> gt_semantic;

  static EvalCase from(const SceneLabeling& pred, const InstanceAnnotation& gt);
};

inline const std::vector<double>& ap_thresholds() {
  static const std::vector<double> t = {0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95};
  return t;
}

// Coverage/precision metrics are per-image means; pixel IoU and instance
// precision/recall pool counts over images. Empty-vs-empty images score 100
// on every ratio and 0 on AvgFP/AvgFN.
ZhangMetrics zhang_metrics(std::span<const EvalCase> cases);
ZhangMetrics zhang_metrics(const InstanceSet& pred, const InstanceSet& gt);

// Per-label AP averaged over labels with ground truth; detections pooled over
// images and ranked by confidence. Distance caps filter ground truth by depth;
// predictions matched to filtered ground truth are ignored.
ApMetrics cityscapes_ap(std::span<const EvalCase> cases, double cap_far_m = 100.0,
                        double cap_near_m = 50.0);
ApMetrics cityscapes_ap(const InstanceSet& pred, const InstanceSet& gt, double cap_far_m = 100.0,
                        double cap_near_m = 50.0);

// Over pairs matched with overlap > 0.5. No pairs: zero errors, 100% inliers.
DepthMetrics depth_metrics(std::span<const EvalCase> cases);
DepthMetrics depth_metrics(const InstanceSet& pred, const InstanceSet& gt);
// Raw pair form: (predicted, ground truth) depths in meters.
DepthMetrics depth_metrics(std::span<const std::pair<double, double>> pairs);

PixelMetrics pixel_semantic_metrics(std::span<const EvalCase> cases, const LabelSet& labels);
PixelMetrics pixel_semantic_metrics(const Raster<LabelId>& pred_semantic, const Raster<LabelId>& gt_semantic,
                                    const InstanceSet& gt_instances, const LabelSet& labels);

MetricReport evaluate(std::span<const EvalCase> cases, const LabelSet& labels, int threads = 1);

}  // namespace ispc
