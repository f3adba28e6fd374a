#include "ispc/scene_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "ispc/errors.hpp"

namespace ispc {

LabelSet::LabelSet(std::vector<SemanticLabel> labels, std::vector<Category> categories,
                   LabelId background_id)
    : labels_(std::move(labels)), categories_(std::move(categories)), background_id_(background_id) {
  if (labels_.empty()) throw InvalidInput("label set is empty");
  if (labels_.size() > 255) throw InvalidInput("label set exceeds 255 labels");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i].id != i) {
      throw InvalidInput("label ids must be dense and start at 0; got id " +
                         std::to_string(labels_[i].id) + " at position " + std::to_string(i));
    }
  }
  if (!contains(background_id_)) throw InvalidInput("background id is not a registered label");
  if (labels_[background_id_].is_object) throw InvalidInput("background label cannot be an object label");

  category_of_label_.assign(labels_.size(), -1);
  for (std::size_t c = 0; c < categories_.size(); ++c) {
    for (LabelId m : categories_[c].members) {
      if (!contains(m)) throw InvalidInput("category '" + categories_[c].name + "' names unknown label");
      if (!labels_[m].is_object) {
        throw InvalidInput("non-object label '" + labels_[m].name + "' placed in a category");
      }
      if (category_of_label_[m] != -1) {
        throw InvalidInput("label '" + labels_[m].name + "' belongs to more than one category");
      }
      category_of_label_[m] = static_cast<int>(c);
    }
  }
  for (const auto& l : labels_) {
    if (l.is_object && category_of_label_[l.id] == -1) {
      throw InvalidInput("object label '" + l.name + "' has no category");
    }
  }
}

LabelSet LabelSet::cityscapes() {
  const char* names[] = {"road",       "sidewalk", "building",      "wall",         "fence",
                         "pole",       "traffic light", "traffic sign", "vegetation", "terrain",
                         "sky",        "person",   "rider",         "car",          "truck",
                         "bus",        "train",    "motorcycle",    "bicycle"};
  std::vector<SemanticLabel> labels;
  for (LabelId i = 0; i < 19; ++i) labels.push_back({i, names[i], i >= 11});
  std::vector<Category> categories = {
      {"car", {13}},
      {"human", {11, 12}},
      {"two-wheeler", {17, 18}},
      {"large-vehicle", {14, 15, 16}},
  };
  return LabelSet(std::move(labels), std::move(categories), 0);
}

LabelSet LabelSet::kitti() {
  return LabelSet({{0, "background", false}, {1, "car", true}}, {{"car", {1}}}, 0);
}

bool LabelSet::is_object(LabelId id) const { return label(id).is_object; }

const SemanticLabel& LabelSet::label(LabelId id) const {
  if (!contains(id)) throw InvalidInput("unregistered label id " + std::to_string(id));
  return labels_[id];
}

LabelId LabelSet::label_id(std::string_view name) const {
  for (const auto& l : labels_) {
    if (l.name == name) return l.id;
  }
  throw InvalidInput("unknown label '" + std::string(name) + "'");
}

CategoryIndex LabelSet::category_index(std::string_view name) const {
  for (std::size_t c = 0; c < categories_.size(); ++c) {
    if (categories_[c].name == name) return static_cast<CategoryIndex>(c);
  }
  throw InvalidInput("unknown category '" + std::string(name) + "'");
}

std::optional<CategoryIndex> LabelSet::category_of(LabelId id) const {
  if (!contains(id)) throw InvalidInput("unregistered label id " + std::to_string(id));
  int c = category_of_label_[id];
  if (c < 0) return std::nullopt;
  return c;
}

DepthLayering::DepthLayering(std::vector<double> lower_bounds_m) : bounds_(std::move(lower_bounds_m)) {
  if (bounds_.size() < 2) throw InvalidInput("depth layering needs at least two classes");
  if (bounds_.size() > 254) throw InvalidInput("depth layering supports at most 254 classes");
  for (std::size_t i = 0; i < bounds_.size(); ++i) {
    if (!std::isfinite(bounds_[i]) || bounds_[i] < 0.0) {
      throw InvalidInput("depth bounds must be finite and non-negative");
    }
    if (i > 0 && !(bounds_[i] > bounds_[i - 1])) {
      throw InvalidInput("depth bounds must be strictly ascending");
    }
  }
}

DepthLayering DepthLayering::kitti() {
  return DepthLayering({0, 2, 3.5, 5, 6, 7, 8.5, 10, 12, 14, 17, 20, 24, 29, 35, 43, 52, 63, 76});
}

DepthLayering DepthLayering::cityscapes() {
  return DepthLayering({0, 6, 8, 10, 12, 14, 17, 20, 23, 27, 31, 36, 41, 47, 54, 63, 73, 86, 100});
}

void DepthLayering::check_class(DepthClass k) const {
  if (k < 1 || k > num_classes()) {
    throw InvalidInput("depth class " + std::to_string(k) + " outside 1.." +
                       std::to_string(num_classes()));
  }
}

double DepthLayering::lower(DepthClass k) const {
  check_class(k);
  return bounds_[k - 1];
}

double DepthLayering::upper(DepthClass k) const {
  check_class(k);
  if (k == num_classes()) return std::numeric_limits<double>::infinity();
  return bounds_[k];
}

DepthClass DepthLayering::class_of(double depth_m) const {
  if (!std::isfinite(depth_m) || depth_m <= 0.0) {
    std::ostringstream os;
    os << "depth must be positive and finite, got " << depth_m;
    throw InvalidInput(os.str());
  }
  if (depth_m < bounds_.front()) {
    std::ostringstream os;
    os << "depth " << depth_m << " m lies below the first depth class";
    throw InvalidInput(os.str());
  }
  auto it = std::upper_bound(bounds_.begin(), bounds_.end(), depth_m);
  return static_cast<DepthClass>(it - bounds_.begin());
}

double DepthLayering::midpoint(DepthClass k) const {
  check_class(k);
  if (k == num_classes()) {
    double prev_width = bounds_[k - 1] - bounds_[k - 2];
    return bounds_[k - 1] + 0.5 * prev_width;
  }
  return 0.5 * (bounds_[k - 1] + bounds_[k]);
}

DepthClass depth_class_of(double depth_m, const DepthLayering& layering) {
  return layering.class_of(depth_m);
}

double depth_midpoint(DepthClass k, const DepthLayering& layering) { return layering.midpoint(k); }

std::optional<CategoryIndex> category_of(LabelId id, const LabelSet& labels) {
  return labels.category_of(id);
}

DirectionBinning::DirectionBinning(int n_bins) : n_bins_(n_bins) {
  if (n_bins < 2 || n_bins > 360) throw InvalidInput("direction bin count must lie in 2..360");
  centers_.reserve(n_bins);
  for (int k = 0; k < n_bins; ++k) {
    double rad = center_deg(k) * std::numbers::pi / 180.0;
    centers_.emplace_back(std::cos(rad), std::sin(rad));
  }
}

Eigen::Vector2d DirectionBinning::center(int k) const {
  if (k < 0 || k >= n_bins_) throw InvalidInput("direction bin out of range");
  return centers_[k];
}

int DirectionBinning::bin_of(double angle_deg) const {
  double a = std::fmod(angle_deg + 0.5 * width_deg(), 360.0);
  if (a < 0) a += 360.0;
  int k = static_cast<int>(std::floor(a / width_deg()));
  return std::min(k, n_bins_ - 1);
}

ChannelTriple make_triple(Eigen::Index width, Eigen::Index height, int n_bins, LabelId fill) {
  ChannelTriple t;
  t.semantic = Raster<LabelId>::Constant(height, width, fill);
  t.depth = Raster<DepthClass>::Constant(height, width, DepthLayering::kBackground);
  t.direction = ScoreVolume::Zero(width * height, n_bins);
  return t;
}

void check_triple(const ChannelTriple& triple) {
  if (!same_shape(triple.semantic, triple.depth)) {
    throw InvalidInput("semantic and depth channels disagree in size");
  }
  if (triple.direction.rows() != triple.width() * triple.height()) {
    throw InvalidInput("direction channel pixel count disagrees with semantic channel");
  }
  if (triple.direction.cols() < 2) throw InvalidInput("direction channel needs at least two bins");
  for (Eigen::Index i = 0; i < triple.direction.rows(); ++i) {
    auto row = triple.direction.row(i);
    if ((row < 0.0f).any() || !row.isFinite().all()) {
      throw InvalidInput("direction scores must be finite and non-negative (pixel " +
                         std::to_string(i) + ")");
    }
    double sum = row.cast<double>().sum();
    if (sum != 0.0 && std::abs(sum - 1.0) > 1e-6) {
      throw InvalidInput("direction score row neither all-zero nor normalized (pixel " +
                         std::to_string(i) + ")");
    }
  }
}

void check_encoded_triple(const ChannelTriple& triple, const LabelSet& labels,
                          const DepthLayering& layering) {
  check_triple(triple);
  for (Eigen::Index r = 0; r < triple.height(); ++r) {
    for (Eigen::Index c = 0; c < triple.width(); ++c) {
      LabelId l = triple.semantic(r, c);
      DepthClass d = triple.depth(r, c);
      bool object = labels.is_object(l);
      if (object != (d != DepthLayering::kBackground)) {
        throw InvalidInput("depth class must be background exactly on non-object pixels");
      }
      if (d > layering.num_classes()) throw InvalidInput("depth class exceeds layering");
    }
  }
}

}  // namespace ispc
