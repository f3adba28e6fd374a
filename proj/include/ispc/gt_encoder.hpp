#pragma once

#include <map>
#include <span>

#include "ispc/raster.hpp"
#include "ispc/scene_model.hpp"

namespace ispc {

// Instance-level ground truth: instance id 0 is background.
struct InstanceAnnotation {
  Raster<InstanceId> instance_ids;
  Raster<LabelId> semantic;
  std::map<InstanceId, double> instance_depths;  // meters

  Eigen::Index width() const { return instance_ids.cols(); }
  Eigen::Index height() const { return instance_ids.rows(); }
};

// Throws InvalidInput naming the offending instance or pixel.
void check_annotation(const InstanceAnnotation& ann, const LabelSet& labels);

// Centroid of the visible pixels, rounded half away from zero per axis.
PixelCoord visible_center(std::span<const PixelCoord> mask);

// Centers of every instance in one pass, same rounding as visible_center.
std::map<InstanceId, PixelCoord> visible_centers(const Raster<InstanceId>& instance_ids);

// Direction bin of the vector from p towards c (0 deg = right, 90 deg = up).
// p == c maps to bin 0.
int encode_direction_class(PixelCoord p, PixelCoord c, const DirectionBinning& bins);

ChannelTriple encode_scene(const InstanceAnnotation& ann, const LabelSet& labels,
                           const DepthLayering& layering, const DirectionBinning& bins);

}  // namespace ispc
