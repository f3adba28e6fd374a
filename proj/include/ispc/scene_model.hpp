#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "ispc/raster.hpp"

namespace ispc {

using CategoryIndex = int;

struct SemanticLabel {
  LabelId id = 0;
  std::string name;
  bool is_object = false;
};

struct Category {
  std::string name;
  std::vector<LabelId> members;
};

// Semantic label registry plus the grouping of object labels into
// matching categories. Immutable after construction.
class LabelSet {
 public:
  LabelSet(std::vector<SemanticLabel> labels, std::vector<Category> categories,
           LabelId background_id);

  // 19 Cityscapes training classes; 8 object classes in 4 categories.
  static LabelSet cityscapes();
  // Background plus car.
  static LabelSet kitti();

  const std::vector<SemanticLabel>& labels() const { return labels_; }
  const std::vector<Category>& categories() const { return categories_; }
  LabelId background_id() const { return background_id_; }
  std::size_t size() const { return labels_.size(); }

  bool contains(LabelId id) const { return id < labels_.size(); }
  bool is_object(LabelId id) const;
  const SemanticLabel& label(LabelId id) const;
  LabelId label_id(std::string_view name) const;
  CategoryIndex category_index(std::string_view name) const;

  // Category of an object label, nullopt for background labels.
  std::optional<CategoryIndex> category_of(LabelId id) const;

 private:
  std::vector<SemanticLabel> labels_;
  std::vector<Category> categories_;
  std::vector<int> category_of_label_;  // -1 for non-object labels
  LabelId background_id_;
};

// Quantization of metric instance depth into ordered classes 1..N.
// Class 0 is reserved for background.
class DepthLayering {
 public:
  static constexpr DepthClass kBackground = 0;

  // Ascending lower bounds; the last range is open-ended.
  explicit DepthLayering(std::vector<double> lower_bounds_m);

  static DepthLayering kitti();
  static DepthLayering cityscapes();

  int num_classes() const { return static_cast<int>(bounds_.size()); }
  const std::vector<double>& lower_bounds() const { return bounds_; }

  double lower(DepthClass k) const;
  // +inf for the final class.
  double upper(DepthClass k) const;
  bool is_bounded(DepthClass k) const { return k < num_classes(); }

  DepthClass class_of(double depth_m) const;

  // Bounded classes: arithmetic midpoint. Final open class: lower bound plus
  // half the width of the preceding class.
  double midpoint(DepthClass k) const;

 private:
  void check_class(DepthClass k) const;
  std::vector<double> bounds_;
};

DepthClass depth_class_of(double depth_m, const DepthLayering& layering);
double depth_midpoint(DepthClass k, const DepthLayering& layering);
std::optional<CategoryIndex> category_of(LabelId id, const LabelSet& labels);

// Equal angular bins; bin k is centered on k * 360/n degrees, with 0 degrees
// pointing to image-right and 90 degrees to image-up.
class DirectionBinning {
 public:
  explicit DirectionBinning(int n_bins = 8);

  int size() const { return n_bins_; }
  double width_deg() const { return 360.0 / n_bins_; }
  double center_deg(int k) const { return k * width_deg(); }
  Eigen::Vector2d center(int k) const;

  // Bin containing the angle; bin k covers [center - w/2, center + w/2).
  int bin_of(double angle_deg) const;

 private:
  int n_bins_;
  std::vector<Eigen::Vector2d> centers_;
};

// Per-pixel direction class scores, one row per pixel in row-major order.
using ScoreVolume = Eigen::Array<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ChannelTriple {
  Raster<LabelId> semantic;
  Raster<DepthClass> depth;
  ScoreVolume direction;

  Eigen::Index width() const { return semantic.cols(); }
  Eigen::Index height() const { return semantic.rows(); }
  int num_bins() const { return static_cast<int>(direction.cols()); }

  auto scores(Eigen::Index row, Eigen::Index col) const {
    return direction.row(row * width() + col);
  }
  auto scores(Eigen::Index row, Eigen::Index col) {
    return direction.row(row * width() + col);
  }
};

// Empty triple of the given shape: background label, background depth,
// all-zero direction rows.
ChannelTriple make_triple(Eigen::Index width, Eigen::Index height, int n_bins, LabelId fill);

// Throws InvalidInput on dimension disagreement or malformed score rows.
void check_triple(const ChannelTriple& triple);

// check_triple plus the encoder contract: depth is background exactly on
// non-object pixels, labels are registered, depth classes exist.
void check_encoded_triple(const ChannelTriple& triple, const LabelSet& labels,
                          const DepthLayering& layering);

}  // namespace ispc
