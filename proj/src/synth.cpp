#include "ispc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ispc/config.hpp"
#include "ispc/errors.hpp"

namespace ispc {
using nlohmann::json;

void check_scene_spec(const SceneSpec& spec, const LabelSet& labels) {
  if (spec.width <= 0 || spec.height <= 0) throw InvalidInput("scene canvas must be non-empty");
  for (std::size_t i = 0; i < spec.instances.size(); ++i) {
    const auto& s = spec.instances[i];
    const std::string where = "scene instance " + std::to_string(i);
    if (!labels.contains(s.label) || !labels.is_object(s.label)) throw InvalidInput(where + ": label is not an object label");
    if (!std::isfinite(s.depth_m) || s.depth_m <= 0.0) throw InvalidInput(where + ": depth must be positive");
    if (s.width < 1 || s.height < 1) throw InvalidInput(where + ": size must be positive");
    if (s.x < 0 || s.y < 0 || s.x + s.width > spec.width || s.y + s.height > spec.height) {
      throw InvalidInput(where + ": shape leaves the canvas");
    }
  }
}

std::vector<PixelCoord> rasterize(const SyntheticInstance& s) {
  std::vector<PixelCoord> px;
  const double cx = s.x + (s.width - 1) / 2.0;
  const double cy = s.y + (s.height - 1) / 2.0;
  const double ax = s.width / 2.0;
  const double ay = s.height / 2.0;
  for (int r = s.y; r < s.y + s.height; ++r) {
    for (int c = s.x; c < s.x + s.width; ++c) {
      bool inside = true;
      switch (s.shape) {
        case Shape::kRectangle:
          break;
        case Shape::kEllipse: {
          const double u = (c - cx) / ax, v = (r - cy) / ay;
          inside = u * u + v * v <= 1.0;
          break;
        }
        case Shape::kLShape:
          // missing top-right quadrant
          inside = !(c >= s.x + s.width / 2 && r < s.y + s.height / 2);
          break;
      }
      if (inside) px.push_back({c, r});
    }
  }
  return px;
}

SyntheticScene synthesize_scene(const SceneSpec& spec, const LabelSet& labels, const DepthLayering& layering,
                                const DirectionBinning& bins) {
  check_scene_spec(spec, labels);
  std::vector<std::size_t> paint(spec.instances.size());
  std::iota(paint.begin(), paint.end(), 0);
  std::stable_sort(paint.begin(), paint.end(),
                   [&](std::size_t a, std::size_t b) { return spec.instances[a].order < spec.instances[b].order; });

  // Provisional ids are list index + 1.
  Raster<InstanceId> provisional = Raster<InstanceId>::Zero(spec.height, spec.width);
  for (std::size_t i : paint) {
    for (const auto& p : rasterize(spec.instances[i])) provisional(p.row, p.col) = static_cast<InstanceId>(i + 1);
  }
  std::vector<long long> visible(spec.instances.size() + 1, 0);
  for (Eigen::Index i = 0; i < provisional.size(); ++i) ++visible[provisional.data()[i]];
  std::vector<InstanceId> renumber(spec.instances.size() + 1, 0);
  SyntheticScene out;
  InstanceId next = 1;
  for (std::size_t i = 0; i < spec.instances.size(); ++i) {
    if (visible[i + 1] == 0) continue;
    renumber[i + 1] = next;
    out.annotation.instance_depths[next] = spec.instances[i].depth_m;
    ++next;
  }
  out.annotation.instance_ids = provisional.unaryExpr([&](InstanceId id) { return renumber[id]; });
  out.annotation.semantic = Raster<LabelId>::Constant(spec.height, spec.width, labels.background_id());
  for (Eigen::Index i = 0; i < provisional.size(); ++i) {
    const InstanceId id = provisional.data()[i];
    if (id != 0) out.annotation.semantic.data()[i] = spec.instances[id - 1].label;
  }
  out.triple = encode_scene(out.annotation, labels, layering, bins);
  return out;
}

namespace {

const char* shape_name(Shape s) {
  switch (s) {
    case Shape::kRectangle: return "rectangle";
    case Shape::kEllipse: return "ellipse";
    case Shape::kLShape: return "l_shape";
  }
  return "rectangle";
}

Shape shape_from(const std::string& name) {
  if (name == "rectangle") return Shape::kRectangle;
  if (name == "ellipse") return Shape::kEllipse;
  if (name == "l_shape" || name == "L") return Shape::kLShape;
  throw InvalidInput("unknown shape '" + name + "'");
}

}  // namespace

SceneSpec parse_scene_spec(const json& doc, const LabelSet& labels) {
  if (!doc.is_object() || doc.value("schema_version", 0) != kSchemaVersion) {
    throw InvalidInput("scene spec needs schema_version " + std::to_string(kSchemaVersion));
  }
  SceneSpec spec;
  try {
    spec.width = doc.at("width").get<int>();
    spec.height = doc.at("height").get<int>();
    int idx = 0;
    for (const auto& j : doc.at("instances")) {
      SyntheticInstance s;
      s.shape = shape_from(j.value("shape", std::string("rectangle")));
      const auto& lbl = j.at("label");
      s.label = lbl.is_string() ? labels.label_id(lbl.get<std::string>()) : lbl.get<LabelId>();
      s.depth_m = j.at("depth_m").get<double>();
      s.x = j.at("x").get<int>();
      s.y = j.at("y").get<int>();
      s.width = j.at("width").get<int>();
      s.height = j.at("height").get<int>();
      s.order = j.value("order", idx);
      spec.instances.push_back(s);
      ++idx;
    }
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed scene spec: ") + e.what());
  }
  check_scene_spec(spec, labels);
  return spec;
}

json to_json(const SceneSpec& spec, const LabelSet& labels) {
  json inst = json::array();
  for (const auto& s : spec.instances) {
    inst.push_back({{"shape", shape_name(s.shape)},
                    {"label", labels.label(s.label).name},
                    {"depth_m", s.depth_m},
                    {"x", s.x},
                    {"y", s.y},
                    {"width", s.width},
                    {"height", s.height},
                    {"order", s.order}});
  }
  return {{"schema_version", kSchemaVersion}, {"width", spec.width}, {"height", spec.height}, {"instances", inst}};
}

SceneSpec random_scene(std::uint64_t seed, const RandomSceneOptions& opts, const LabelSet& labels,
                       const DepthLayering& layering, const TemplateConfig& templates) {
  if (opts.min_instances < 0 || opts.max_instances < opts.min_instances) {
    throw InvalidInput("bad instance count range");
  }
  if (opts.shapes.empty()) throw InvalidInput("no shapes to draw from");
  std::mt19937_64 rng(seed);
  auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  std::vector<CategoryIndex> usable;
  for (CategoryIndex c = 0; c < static_cast<CategoryIndex>(labels.categories().size()); ++c) {
    if (!labels.categories()[c].members.empty()) usable.push_back(c);
  }
  if (usable.empty()) throw InvalidInput("label set has no object categories");

  SceneSpec spec;
  spec.width = opts.width;
  spec.height = opts.height;
  struct Box {
    int x, y, w, h;
  };
  std::vector<Box> placed;
  const int n = uniform_int(opts.min_instances, opts.max_instances);
  for (int i = 0; i < n; ++i) {
    const CategoryIndex cat = usable[uniform_int(0, static_cast<int>(usable.size()) - 1)];
    const auto& members = labels.categories()[cat].members;
    const LabelId label = members[uniform_int(0, static_cast<int>(members.size()) - 1)];
    const auto k = static_cast<DepthClass>(uniform_int(1, layering.num_classes()));
    const double lo = layering.lower(k);
    const double hi = layering.is_bounded(k) ? layering.upper(k) : 2.0 * layering.midpoint(k) - lo;
    // Strictly inside the range, away from the quantization edges.
    const double depth = lo + (hi - lo) * std::uniform_real_distribution<double>(0.05, 0.95)(rng);
    const auto [w, h] = template_size(cat, k, templates, labels, layering);
    const Shape shape = opts.shapes[uniform_int(0, static_cast<int>(opts.shapes.size()) - 1)];
    if (w > spec.width || h > spec.height) continue;
    for (int attempt = 0; attempt < opts.placement_attempts; ++attempt) {
      const int x = uniform_int(0, spec.width - w);
      const int y = uniform_int(0, spec.height - h);
      const bool clear = std::all_of(placed.begin(), placed.end(), [&](const Box& b) {
        const int gap_x = std::max(b.x - (x + w), x - (b.x + b.w));
        const int gap_y = std::max(b.y - (y + h), y - (b.y + b.h));
        return gap_x > opts.separation * std::max(w, b.w) || gap_y > opts.separation * std::max(h, b.h);
      });
      if (!clear) continue;
      placed.push_back({x, y, w, h});
      spec.instances.push_back({shape, label, depth, x, y, w, h, static_cast<int>(spec.instances.size())});
      break;
    }
  }
  return spec;
}

}  // namespace ispc
