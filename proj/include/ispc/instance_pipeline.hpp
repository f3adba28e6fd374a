#pragma once

#include <vector>

#include <Eigen/Core>

#include "ispc/direction_field.hpp"
#include "ispc/raster.hpp"
#include "ispc/scene_model.hpp"
#include "ispc/template_engine.hpp"

namespace ispc {

struct PipelineConfig {
  TemplateConfig templates = TemplateConfig::defaults();
  double score_threshold = 0.3;   // NMS accepts scores strictly above this
  int depth_tolerance = 1;        // classes, for assignment and fusion
  double agreement_deg = 67.5;    // max angle between direction and pixel->center
  double bias_threshold = 0.3;    // normalized bias that triggers a fusion search
  double search_factor = 1.5;     // search reach in template extents
  bool fusion = true;
  int min_pixels = 10;
  double min_direction_magnitude = 0.0;  // confidence gate; 0 disables
  int threads = 1;                // 0 = hardware concurrency, capped by ISPC_THREADS

  void validate() const;
};

struct InstanceCenter {
  PixelCoord position;
  CategoryIndex category = 0;
  DepthClass depth_class = 0;
  double score = 0.0;
  int template_width = 0;
  int template_height = 0;
};

struct InstanceProposal {
  InstanceCenter center;
  std::vector<PixelCoord> pixels;
  Eigen::Vector2d bias = Eigen::Vector2d::Zero();  // sum of member unit vectors

  // |bias| / pixel count: ~0 for complete instances, ~1 for one-sided ones.
  double normalized_bias() const;
};

struct InstanceRecord {
  InstanceId id = 0;
  LabelId semantic = 0;
  double depth_m = 0.0;
  int pixel_count = 0;
  double score = 0.0;  // NCC value at the instance center
  PixelCoord center;
  CategoryIndex category = 0;
};

struct SceneLabeling {
  Raster<InstanceId> instance_ids;  // 0 = no instance
  std::vector<InstanceRecord> instances;  // ordered by id, ids 1..n
  Raster<LabelId> background_semantic;
};

// Greedy global-max NMS per category on the effective score maps. Ties are
// broken by (row, col). Each accepted center suppresses its template window.
std::vector<InstanceCenter> find_centers(const std::vector<CategoryScores>& maps,
                                         const PipelineConfig& cfg);

// Every object pixel joins the nearest center of its category, within the
// depth tolerance, whose relative location agrees with the pixel's decoded
// direction. Earlier centers win distance ties. Pixels without an agreeing
// center stay unassigned. Centers that collect no pixel are dropped.
std::vector<InstanceProposal> assign_pixels(const std::vector<InstanceCenter>& centers,
                                            const DirectionField& field, const ChannelTriple& triple,
                                            const LabelSet& labels, const PipelineConfig& cfg);

// Merges biased proposals with a compatible neighbor found along the bias
// direction, until no biased proposal has a partner.
std::vector<InstanceProposal> fuse_proposals(std::vector<InstanceProposal> proposals,
                                             const DirectionField& field, const PipelineConfig& cfg);

SceneLabeling finalize(const std::vector<InstanceProposal>& proposals, const ChannelTriple& triple,
                       const DepthLayering& layering, const LabelSet& labels,
                       const PipelineConfig& cfg);

// Intermediate products of one segment_scene run.
struct SegmentationTrace {
  DirectionField field;
  std::vector<CategoryScores> scores;
  std::vector<InstanceCenter> centers;
  std::vector<InstanceProposal> proposals;
  std::vector<InstanceProposal> fused;
  SceneLabeling labeling;
};

SegmentationTrace segment_scene_traced(const ChannelTriple& triple, const LabelSet& labels,
                                       const DepthLayering& layering, const DirectionBinning& bins,
                                       const PipelineConfig& cfg);

SceneLabeling segment_scene(const ChannelTriple& triple, const LabelSet& labels,
                            const DepthLayering& layering, const DirectionBinning& bins,
                            const PipelineConfig& cfg);

}  // namespace ispc
