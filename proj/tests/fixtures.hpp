#pragma once

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "ispc/gt_encoder.hpp"
#include "ispc/instance_pipeline.hpp"
#include "ispc/synth.hpp"

namespace fixtures {

using namespace ispc;

inline SyntheticInstance rect(LabelId label, double depth, int x, int y, int w, int h, int order = 0) {
  return {Shape::kRectangle, label, depth, x, y, w, h, order};
}

inline SyntheticScene scene(int width, int height, std::vector<SyntheticInstance> insts,
                            const LabelSet& labels = LabelSet::cityscapes(),
                            const DepthLayering& layering = DepthLayering::kitti()) {
  return synthesize_scene({width, height, std::move(insts)}, labels, layering, DirectionBinning{});
}

// Pixel IoU between one instance of each raster.
inline double mask_iou(const Raster<InstanceId>& a, InstanceId ia, const Raster<InstanceId>& b, InstanceId ib) {
  long long inter = 0, uni = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const bool x = a(i) == ia, y = b(i) == ib;
    inter += x && y;
    uni += x || y;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// Best IoU of GT instance g against any predicted instance.
inline double best_iou(const SceneLabeling& pred, const InstanceAnnotation& gt, InstanceId g) {
  double best = 0.0;
  for (const auto& rec : pred.instances) best = std::max(best, mask_iou(pred.instance_ids, rec.id, gt.instance_ids, g));
  return best;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() / ("ispc_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

}  // namespace fixtures
