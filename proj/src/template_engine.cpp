#include "ispc/template_engine.hpp"

#include <map>

#include "ispc/parallel.hpp"

namespace ispc {

TemplateConfig TemplateConfig::defaults() {
  TemplateConfig cfg;
  cfg.sizes = {
      {"car", 21, 11},
      {"large-vehicle", 31, 15},
      {"human", 7, 21},
      {"two-wheeler", 11, 21},
  };
  return cfg;
}

const CategoryTemplateSize& TemplateConfig::size_for(const std::string& category) const {
  for (const auto& s : sizes) {
    if (s.category == category) return s;
  }
  throw InvalidInput("no template size configured for category '" + category + "'");
}

void TemplateConfig::validate() const {
  if (min_size < 3 || min_size % 2 == 0) throw InvalidInput("template min_size must be odd and >= 3");
  if (max_size < min_size || max_size % 2 == 0) {
    throw InvalidInput("template max_size must be odd and >= min_size");
  }
  if (reference_depth_class < 1) throw InvalidInput("reference depth class must be >= 1");
  for (const auto& s : sizes) {
    if (s.base_width < 1 || s.base_height < 1) {
      throw InvalidInput("template base size for '" + s.category + "' must be positive");
    }
  }
}

double template_scale(DepthClass k, const TemplateConfig& cfg, const DepthLayering& layering) {
  return layering.midpoint(cfg.reference_depth_class) / layering.midpoint(k);
}

Eigen::Vector2d nominal_template_size(CategoryIndex category, DepthClass k, const TemplateConfig& cfg,
                                      const LabelSet& labels, const DepthLayering& layering) {
  if (category < 0 || category >= static_cast<int>(labels.categories().size())) {
    throw InvalidInput("unknown category index " + std::to_string(category));
  }
  const auto& base = cfg.size_for(labels.categories()[category].name);
  double s = template_scale(k, cfg, layering);
  return {base.base_width * s, base.base_height * s};
}

namespace {

int clamp_odd(double nominal, int lo, int hi) {
  auto v = static_cast<int>(std::lround(nominal));
  v = std::clamp(v, lo, hi);
  if (v % 2 == 0) v = (v + 1 <= hi) ? v + 1 : v - 1;
  return v;
}

}  // namespace

std::pair<int, int> template_size(CategoryIndex category, DepthClass k, const TemplateConfig& cfg,
                                  const LabelSet& labels, const DepthLayering& layering) {
  cfg.validate();
  Eigen::Vector2d n = nominal_template_size(category, k, cfg, labels, layering);
  return {clamp_odd(n.x(), cfg.min_size, cfg.max_size), clamp_odd(n.y(), cfg.min_size, cfg.max_size)};
}

Template make_pattern(int width, int height) {
  if (width < 3 || height < 3 || width % 2 == 0 || height % 2 == 0) {
    throw InvalidInput("template dimensions must be odd and >= 3");
  }
  Template t;
  t.width = width;
  t.height = height;
  t.px = Raster<double>::Zero(height, width);
  t.py = Raster<double>::Zero(height, width);
  t.mask = Raster<bool>::Constant(height, width, true);
  const int hw = width / 2;
  const int hh = height / 2;
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      Eigen::Vector2d v(hw - c, -(hh - r));
      double len = v.norm();
      if (len == 0.0) continue;
      t.px(r, c) = v.x() / len;
      t.py(r, c) = v.y() / len;
    }
  }
  return t;
}

Template synthesize_template(CategoryIndex category, DepthClass k, const TemplateConfig& cfg,
                             const LabelSet& labels, const DepthLayering& layering) {
  auto [w, h] = template_size(category, k, cfg, labels, layering);
  Template t = make_pattern(w, h);
  t.category = category;
  t.depth_class = k;
  return t;
}

Raster<bool> category_mask(const ChannelTriple& triple, const LabelSet& labels, CategoryIndex category) {
  Raster<bool> mask(triple.height(), triple.width());
  for (Eigen::Index r = 0; r < triple.height(); ++r) {
    for (Eigen::Index c = 0; c < triple.width(); ++c) {
      auto cat = labels.category_of(triple.semantic(r, c));
      mask(r, c) = cat && *cat == category;
    }
  }
  return mask;
}

std::vector<CategoryScores> score_maps(const ChannelTriple& triple, const DirectionField& field,
                                       const LabelSet& labels, const DepthLayering& layering,
                                       const TemplateConfig& cfg, int threads, ScoreMapExtent extent) {
  if (field.width() != triple.width() || field.height() != triple.height()) {
    throw InvalidInput("direction field and triple differ in size");
  }
  cfg.validate();
  const Eigen::Index width = triple.width();
  const Eigen::Index height = triple.height();

  struct Job {
    std::size_t category_slot;
    DepthClass depth_class;
  };
  std::vector<CategoryScores> out;
  std::vector<Raster<bool>> masks;
  std::vector<Job> jobs;
  const auto n_categories = static_cast<CategoryIndex>(labels.categories().size());
  for (CategoryIndex c = 0; c < n_categories; ++c) {
    Raster<bool> mask = category_mask(triple, labels, c);
    if (!mask.any()) continue;
    std::map<DepthClass, bool> present;
    for (Eigen::Index r = 0; r < height; ++r) {
      for (Eigen::Index col = 0; col < width; ++col) {
        if (!mask(r, col)) continue;
        DepthClass d = triple.depth(r, col);
        if (d == DepthLayering::kBackground) continue;
        if (d > layering.num_classes()) {
          throw InvalidInput("depth class " + std::to_string(d) + " exceeds layering");
        }
        present[d] = true;
      }
    }
    CategoryScores cs;
    cs.category = c;
    for (const auto& [d, _] : present) {
      cs.maps.push_back({d, synthesize_template(c, d, cfg, labels, layering), {}});
      jobs.push_back({out.size(), d});
    }
    out.push_back(std::move(cs));
    masks.push_back(std::move(mask));
  }

  // Map index within its category, in job order.
  std::vector<std::size_t> slot_in_category(jobs.size());
  for (std::size_t j = 0, prev = SIZE_MAX, i = 0; j < jobs.size(); ++j) {
    if (jobs[j].category_slot != prev) {
      prev = jobs[j].category_slot;
      i = 0;
    }
    slot_in_category[j] = i++;
  }

  parallel_for(jobs.size(), threads, [&](std::size_t j) {
    const auto& job = jobs[j];
    const Raster<bool>& mask = masks[job.category_slot];
    DepthScoreMap& dm = out[job.category_slot].maps[slot_in_category[j]];
    if (extent == ScoreMapExtent::kFull) {
      dm.map = ncc_score_map(field, mask, dm.tmpl);
    } else {
      Raster<bool> roi = mask && (triple.depth == job.depth_class);
      dm.map = ncc_score_map(field, mask, dm.tmpl, &roi);
    }
  });

  for (std::size_t s = 0; s < out.size(); ++s) {
    auto& cs = out[s];
    cs.effective = {cs.category, Raster<double>::Constant(height, width, ScoreMap::kInvalid)};
    cs.map_index = Raster<std::int16_t>::Constant(height, width, -1);
    std::map<DepthClass, std::int16_t> index_of;
    for (std::size_t i = 0; i < cs.maps.size(); ++i) {
      index_of[cs.maps[i].depth_class] = static_cast<std::int16_t>(i);
    }
    for (Eigen::Index r = 0; r < height; ++r) {
      for (Eigen::Index c = 0; c < width; ++c) {
        if (!masks[s](r, c)) continue;
        auto it = index_of.find(triple.depth(r, c));
        if (it == index_of.end()) continue;
        cs.map_index(r, c) = it->second;
        cs.effective.scores(r, c) = cs.maps[it->second].map.scores(r, c);
      }
    }
  }
  return out;
}

}  // namespace ispc
