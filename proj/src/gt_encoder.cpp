#include "ispc/gt_encoder.hpp"

#include <cmath>
#include <numbers>

#include "ispc/errors.hpp"

namespace ispc {
namespace {

// round(sum / count), halves away from zero, exact in integer arithmetic.
int rounded_mean(long long sum, long long count) {
  long long twice = 2 * sum;
  if (twice >= 0) return static_cast<int>((twice + count) / (2 * count));
  return -static_cast<int>((-twice + count) / (2 * count));
}

}  // namespace

void check_annotation(const InstanceAnnotation& ann, const LabelSet& labels) {
  if (!same_shape(ann.instance_ids, ann.semantic)) {
    throw InvalidInput("instance and semantic rasters disagree in size");
  }
  for (const auto& [id, depth] : ann.instance_depths) {
    if (!std::isfinite(depth) || depth <= 0.0) {
      throw InvalidInput("instance " + std::to_string(id) + " has non-positive or non-finite depth");
    }
  }
  for (Eigen::Index r = 0; r < ann.height(); ++r) {
    for (Eigen::Index c = 0; c < ann.width(); ++c) {
      InstanceId id = ann.instance_ids(r, c);
      LabelId l = ann.semantic(r, c);
      bool object = labels.is_object(l);
      if (id < 0) throw InvalidInput("negative instance id");
      if (id != 0 && !object) {
        throw InvalidInput("instance " + std::to_string(id) + " covers non-object label '" +
                           labels.label(l).name + "'");
      }
      if (id == 0 && object) {
        throw InvalidInput("object-labeled pixel at (" + std::to_string(c) + ", " +
                           std::to_string(r) + ") belongs to no instance");
      }
      if (id != 0 && !ann.instance_depths.contains(id)) {
        throw InvalidInput("missing depth for instance " + std::to_string(id));
      }
    }
  }
}

PixelCoord visible_center(std::span<const PixelCoord> mask) {
  if (mask.empty()) throw InvalidInput("visible_center of an empty mask");
  long long sc = 0, sr = 0;
  for (const auto& p : mask) {
    sc += p.col;
    sr += p.row;
  }
  auto n = static_cast<long long>(mask.size());
  return {rounded_mean(sc, n), rounded_mean(sr, n)};
}

std::map<InstanceId, PixelCoord> visible_centers(const Raster<InstanceId>& instance_ids) {
  struct Acc {
    long long sc = 0, sr = 0, n = 0;
  };
  std::map<InstanceId, Acc> acc;
  for (Eigen::Index r = 0; r < instance_ids.rows(); ++r) {
    for (Eigen::Index c = 0; c < instance_ids.cols(); ++c) {
      InstanceId id = instance_ids(r, c);
      if (id == 0) continue;
      auto& a = acc[id];
      a.sc += c;
      a.sr += r;
      ++a.n;
    }
  }
  std::map<InstanceId, PixelCoord> centers;
  for (const auto& [id, a] : acc) centers[id] = {rounded_mean(a.sc, a.n), rounded_mean(a.sr, a.n)};
  return centers;
}

int encode_direction_class(PixelCoord p, PixelCoord c, const DirectionBinning& bins) {
  if (p == c) return 0;
  double dx = c.col - p.col;
  double dy = -(c.row - p.row);
  double deg = std::atan2(dy, dx) * 180.0 / std::numbers::pi;
  return bins.bin_of(deg);
}

ChannelTriple encode_scene(const InstanceAnnotation& ann, const LabelSet& labels,
                           const DepthLayering& layering, const DirectionBinning& bins) {
  check_annotation(ann, labels);
  const auto centers = visible_centers(ann.instance_ids);
  std::map<InstanceId, DepthClass> depth_class;
  for (const auto& [id, center] : centers) {
    depth_class[id] = layering.class_of(ann.instance_depths.at(id));
  }

  ChannelTriple t = make_triple(ann.width(), ann.height(), bins.size(), labels.background_id());
  t.semantic = ann.semantic;
  for (Eigen::Index r = 0; r < ann.height(); ++r) {
    for (Eigen::Index c = 0; c < ann.width(); ++c) {
      InstanceId id = ann.instance_ids(r, c);
      if (id == 0) continue;
      t.depth(r, c) = depth_class.at(id);
      PixelCoord p{static_cast<int>(c), static_cast<int>(r)};
      t.scores(r, c)(encode_direction_class(p, centers.at(id), bins)) = 1.0f;
    }
  }
  return t;
}

}  // namespace ispc
