#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ispc/eval_metrics.hpp"
#include "ispc/gt_encoder.hpp"
#include "ispc/instance_pipeline.hpp"
#include "ispc/scene_model.hpp"

namespace ispc {

// Channel raster container "ISPC1": magic, u32 width, u32 height,
// u16 channels, u8 element kind (little endian), then row-major,
// channel-interleaved payload.
enum class ElementKind : std::uint8_t { kU8 = 0, kF32 = 1 };

struct RasterFile {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint16_t channels = 0;
  ElementKind kind = ElementKind::kU8;
  std::vector<std::uint8_t> u8;  // kU8 payload
  std::vector<float> f32;        // kF32 payload
};

std::vector<std::uint8_t> encode_raster_file(const RasterFile& file);
// `name` is used in error messages.
RasterFile decode_raster_file(const std::vector<std::uint8_t>& bytes, const std::string& name);

RasterFile read_raster_file(const std::filesystem::path& path);
void write_raster_file(const std::filesystem::path& path, const RasterFile& file);

// Writes to a sibling temporary and renames over the target.
void atomic_write(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void atomic_write(const std::filesystem::path& path, const std::string& text);

// File sets addressed by a path prefix.
struct TriplePaths {
  std::filesystem::path semantic, depth, direction;
  static TriplePaths from_prefix(const std::filesystem::path& prefix);
};
struct AnnotationPaths {
  std::filesystem::path instances, semantic, depths;
  static AnnotationPaths from_prefix(const std::filesystem::path& prefix);
};
struct LabelingPaths {
  std::filesystem::path instances, semantic, records;
  static LabelingPaths from_prefix(const std::filesystem::path& prefix);
};

ChannelTriple read_triple(const TriplePaths& paths);
void write_triple(const ChannelTriple& triple, const TriplePaths& paths);

InstanceAnnotation read_annotation(const std::filesystem::path& instances, const std::filesystem::path& semantic,
                                   const std::filesystem::path& depths_json);
void write_annotation(const InstanceAnnotation& ann, const AnnotationPaths& paths);

nlohmann::json depths_to_json(const std::map<InstanceId, double>& depths);
std::map<InstanceId, double> depths_from_json(const nlohmann::json& j);

nlohmann::json labeling_records_to_json(const SceneLabeling& labeling, const LabelSet& labels);
SceneLabeling read_labeling(const LabelingPaths& paths, const LabelSet& labels);
void write_labeling(const SceneLabeling& labeling, const LabelingPaths& paths, const LabelSet& labels);

nlohmann::json report_to_json(const MetricReport& report);

}  // namespace ispc
