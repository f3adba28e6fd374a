#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ispc/direction_field.hpp"
#include "ispc/errors.hpp"
#include "ispc/raster.hpp"
#include "ispc/scene_model.hpp"

namespace ispc {

struct CategoryTemplateSize {
  std::string category;
  int base_width = 0;   // pixels at the reference depth class
  int base_height = 0;
};

struct TemplateConfig {
  std::vector<CategoryTemplateSize> sizes;
  DepthClass reference_depth_class = 8;
  int min_size = 5;  // odd
  int max_size = 61; // odd

  // car 21x11, large-vehicle 31x15, human 7x21, two-wheeler 11x21.
  static TemplateConfig defaults();

  const CategoryTemplateSize& size_for(const std::string& category) const;
  void validate() const;
};

// Ideal inward-pointing direction pattern. Cell (r, c) holds the unit vector
// from that cell towards the center cell, (x right, y up); the center is zero.
struct Template {
  CategoryIndex category = 0;
  DepthClass depth_class = 0;
  int width = 0;
  int height = 0;
  Raster<double> px;
  Raster<double> py;
  Raster<bool> mask;

  int half_width() const { return width / 2; }
  int half_height() const { return height / 2; }
};

// Linear scale applied to the base size at depth class k.
double template_scale(DepthClass k, const TemplateConfig& cfg, const DepthLayering& layering);

// Size before rounding, clamping and odd-forcing.
Eigen::Vector2d nominal_template_size(CategoryIndex category, DepthClass k, const TemplateConfig& cfg,
                                      const LabelSet& labels, const DepthLayering& layering);

// Rounded and clamped size; each axis independently clamped to
// [min_size, max_size] and forced odd.
std::pair<int, int> template_size(CategoryIndex category, DepthClass k, const TemplateConfig& cfg,
                                  const LabelSet& labels, const DepthLayering& layering);

Template make_pattern(int width, int height);

Template synthesize_template(CategoryIndex category, DepthClass k, const TemplateConfig& cfg,
                             const LabelSet& labels, const DepthLayering& layering);

struct ScoreMap {
  static constexpr double kInvalid = -std::numeric_limits<double>::infinity();

  CategoryIndex category = 0;
  Raster<double> scores;

  static bool valid(double s) { return s != kInvalid; }
};

namespace detail {

// Summed-area table with a zero first row and column.
template <typename Scalar>
Raster<double> integral(const Raster<Scalar>& img) {
  Raster<double> out = Raster<double>::Zero(img.rows() + 1, img.cols() + 1);
  for (Eigen::Index r = 0; r < img.rows(); ++r) {
    double run = 0.0;
    for (Eigen::Index c = 0; c < img.cols(); ++c) {
      run += static_cast<double>(img(r, c));
      out(r + 1, c + 1) = out(r, c + 1) + run;
    }
  }
  return out;
}

inline double box_sum(const Raster<double>& sat, Eigen::Index r0, Eigen::Index c0, Eigen::Index r1,
                      Eigen::Index c1) {
  return sat(r1, c1) - sat(r0, c1) - sat(r1, c0) + sat(r0, c0);
}

}  // namespace detail

// Normalized cross-correlation of the template against the direction field.
// Field vectors outside category_mask are zeroed. Each window and the template
// are flattened into 2*w*h samples (x and y components pooled); the result is
// their zero-mean unit-norm dot product. Out-of-image cells count as zero.
// Zero-variance windows, and pixels outside `roi` when given, are kInvalid.
template <typename Scalar>
ScoreMap ncc_score_map(const DirectionFieldT<Scalar>& field, const Raster<bool>& category_mask,
                       const Template& t, const Raster<bool>* roi = nullptr) {
  const Eigen::Index width = field.width();
  const Eigen::Index height = field.height();
  if (!same_shape(field.vx, category_mask)) throw InvalidInput("field and category mask differ in size");
  if (roi && !same_shape(*roi, category_mask)) throw InvalidInput("roi and category mask differ in size");
  if (t.width > width || t.height > height) {
    throw InvalidInput("template " + std::to_string(t.width) + "x" + std::to_string(t.height) +
                       " larger than image " + std::to_string(width) + "x" + std::to_string(height));
  }

  Raster<double> fx = category_mask.select(field.vx.template cast<double>(), 0.0);
  Raster<double> fy = category_mask.select(field.vy.template cast<double>(), 0.0);
  Raster<double> sat_s = detail::integral<double>(fx + fy);
  Raster<double> sat_q = detail::integral<double>(fx.square() + fy.square());

  const double n = 2.0 * t.width * t.height;
  Raster<double> tx = t.mask.select(t.px, 0.0);
  Raster<double> ty = t.mask.select(t.py, 0.0);
  const double tmean = (tx.sum() + ty.sum()) / n;
  tx -= tmean;
  ty -= tmean;
  const double tnorm = std::sqrt(tx.square().sum() + ty.square().sum());
  if (!(tnorm > 0.0)) throw InvalidInput("template has zero variance");
  tx /= tnorm;
  ty /= tnorm;

  ScoreMap out{t.category, Raster<double>::Constant(height, width, ScoreMap::kInvalid)};
  const int hw = t.half_width();
  const int hh = t.half_height();
  for (Eigen::Index r = 0; r < height; ++r) {
    for (Eigen::Index c = 0; c < width; ++c) {
      if (roi && !(*roi)(r, c)) continue;
      const Eigen::Index r0 = std::max<Eigen::Index>(r - hh, 0);
      const Eigen::Index r1 = std::min<Eigen::Index>(r + hh + 1, height);
      const Eigen::Index c0 = std::max<Eigen::Index>(c - hw, 0);
      const Eigen::Index c1 = std::min<Eigen::Index>(c + hw + 1, width);
      const double s = detail::box_sum(sat_s, r0, c0, r1, c1);
      const double q = detail::box_sum(sat_q, r0, c0, r1, c1);
      const double var = q - s * s / n;
      if (var <= 1e-12) continue;
      // Template cell offset of the clipped window's top-left corner.
      const Eigen::Index tr = r0 - (r - hh);
      const Eigen::Index tc = c0 - (c - hw);
      const Eigen::Index bh = r1 - r0;
      const Eigen::Index bw = c1 - c0;
      const double num = (tx.block(tr, tc, bh, bw) * fx.block(r0, c0, bh, bw)).sum() +
                         (ty.block(tr, tc, bh, bw) * fy.block(r0, c0, bh, bw)).sum();
      out.scores(r, c) = std::clamp(num / std::sqrt(var), -1.0, 1.0);
    }
  }
  return out;
}

// Pixels whose semantic label falls in the category.
Raster<bool> category_mask(const ChannelTriple& triple, const LabelSet& labels, CategoryIndex category);

struct DepthScoreMap {
  DepthClass depth_class = 0;
  Template tmpl;
  ScoreMap map;
};

// All score maps of one category plus the per-pixel effective score: at a
// pixel of the category with depth class k, the value of the class-k map.
struct CategoryScores {
  CategoryIndex category = 0;
  std::vector<DepthScoreMap> maps;       // ascending depth class
  ScoreMap effective;
  Raster<std::int16_t> map_index;       // index into maps, -1 where no map applies
};

enum class ScoreMapExtent {
  kEffectivePixels,  // each map evaluated only where it supplies the effective score
  kFull,             // every pixel of every map
};

// One map per (category, depth class present under that category's pixels).
// Categories without pixels are omitted.
std::vector<CategoryScores> score_maps(const ChannelTriple& triple, const DirectionField& field,
                                       const LabelSet& labels, const DepthLayering& layering,
                                       const TemplateConfig& cfg, int threads = 1,
                                       ScoreMapExtent extent = ScoreMapExtent::kEffectivePixels);

}  // namespace ispc
