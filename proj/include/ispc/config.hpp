#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "ispc/corruption.hpp"
#include "ispc/instance_pipeline.hpp"
#include "ispc/scene_model.hpp"

namespace ispc {

inline constexpr int kSchemaVersion = 1;

// Label registry, depth layering and direction binning shared by every stage.
struct SceneModel {
  LabelSet labels = LabelSet::cityscapes();
  DepthLayering layering = DepthLayering::kitti();
  DirectionBinning bins{8};
};

struct Config {
  SceneModel model;
  PipelineConfig pipeline;
  NoiseSpec noise;
};

// Missing sections fall back to defaults; unknown keys are rejected.
// Throws InvalidInput for schema violations.
Config parse_config(const nlohmann::json& doc);
Config load_config(const std::filesystem::path& path);

// Accepts either a bare noise object or a document with a "noise" section.
NoiseSpec parse_noise(const nlohmann::json& doc);
NoiseSpec load_noise(const std::filesystem::path& path);

nlohmann::json to_json(const Config& cfg);

nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace ispc
