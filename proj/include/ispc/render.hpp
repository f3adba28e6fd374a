#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "ispc/direction_field.hpp"
#include "ispc/instance_pipeline.hpp"
#include "ispc/template_engine.hpp"

namespace ispc {

// 8-bit image with 1 (gray) or 3 (RGB) interleaved channels.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<std::uint8_t> pixels;

  std::uint8_t* at(int row, int col) { return &pixels[(static_cast<std::size_t>(row) * width + col) * channels]; }
};

// Non-gray color for an instance id; distinct for distinct ids in the same
// call to instance_palette.
std::vector<std::array<std::uint8_t, 3>> instance_palette(const std::vector<InstanceId>& ids);

// Instances in palette colors over gray levels derived from the semantic label.
Image render_labeling(const SceneLabeling& labeling);
// [-1, 1] mapped to 0..255; invalid scores are black.
Image render_score_map(const ScoreMap& map);
// Hue encodes angle, value encodes raw magnitude.
Image render_field(const DirectionField& field);
Image render_template(const Template& t);

std::vector<std::uint8_t> encode_png(const Image& image);
void write_png(const std::filesystem::path& path, const Image& image);

}  // namespace ispc
