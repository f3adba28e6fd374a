#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "ispc/gt_encoder.hpp"
#include "ispc/scene_model.hpp"
#include "ispc/template_engine.hpp"

namespace ispc {

enum class Shape { kRectangle, kEllipse, kLShape };

struct SyntheticInstance {
  Shape shape = Shape::kRectangle;
  LabelId label = 0;
  double depth_m = 0.0;
  int x = 0, y = 0;          // top-left of the bounding box
  int width = 0, height = 0;
  int order = 0;             // painting order; higher occludes lower
};

struct SceneSpec {
  int width = 0;
  int height = 0;
  std::vector<SyntheticInstance> instances;
};

struct SyntheticScene {
  InstanceAnnotation annotation;
  ChannelTriple triple;
};

void check_scene_spec(const SceneSpec& spec, const LabelSet& labels);

// Pixels covered by the shape inside its bounding box.
std::vector<PixelCoord> rasterize(const SyntheticInstance& inst);

// Paints instances in ascending order (ties keep list order), drops fully
// occluded ones, numbers survivors 1..n in list order and encodes the result.
SyntheticScene synthesize_scene(const SceneSpec& spec, const LabelSet& labels, const DepthLayering& layering,
                                const DirectionBinning& bins);

SceneSpec parse_scene_spec(const nlohmann::json& doc, const LabelSet& labels);
nlohmann::json to_json(const SceneSpec& spec, const LabelSet& labels);

struct RandomSceneOptions {
  int width = 960;
  int height = 540;
  int min_instances = 1;
  int max_instances = 50;
  std::vector<Shape> shapes = {Shape::kRectangle, Shape::kEllipse};
  int placement_attempts = 400;
  // Bounding boxes are kept apart by more than this many template widths
  // horizontally or template heights vertically.
  double separation = 1.0;
};

// Seeded scene with well-separated instances whose sizes equal their
// category template at their depth class. Instances that cannot be placed
// are skipped, so the result may hold fewer than requested.
SceneSpec random_scene(std::uint64_t seed, const RandomSceneOptions& opts, const LabelSet& labels,
                       const DepthLayering& layering, const TemplateConfig& templates);

}  // namespace ispc
