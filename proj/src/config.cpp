#include "ispc/config.hpp"

#include <fstream>
#include <set>

#include "ispc/errors.hpp"

namespace ispc {
namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw InvalidInput(where + " must be a JSON object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.contains(key)) throw InvalidInput("unknown key '" + key + "' in " + where);
  }
}

void check_schema(const json& doc) {
  if (!doc.is_object() || !doc.contains("schema_version")) {
    throw InvalidInput("config is missing schema_version");
  }
  if (doc.at("schema_version") != kSchemaVersion) {
    throw InvalidInput("unsupported schema_version " + doc.at("schema_version").dump());
  }
}

template <typename T>
void read_opt(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) {
    try {
      out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
      throw InvalidInput(std::string("bad value for '") + key + "': " + e.what());
    }
  }
}

LabelSet parse_labels(const json& j) {
  if (j.is_string()) {
    if (j == "cityscapes") return LabelSet::cityscapes();
    if (j == "kitti") return LabelSet::kitti();
    throw InvalidInput("unknown label preset " + j.dump());
  }
  check_keys(j, {"labels", "categories", "background"}, "labels");
  std::vector<SemanticLabel> labels;
  for (const auto& l : j.at("labels")) {
    check_keys(l, {"id", "name", "is_object"}, "label entry");
    labels.push_back({l.at("id").get<LabelId>(), l.at("name").get<std::string>(), l.value("is_object", false)});
  }
  auto id_of = [&](const std::string& name) -> LabelId {
    for (const auto& l : labels) {
      if (l.name == name) return l.id;
    }
    throw InvalidInput("unknown label '" + name + "'");
  };
  std::vector<Category> cats;
  for (const auto& c : j.value("categories", json::array())) {
    check_keys(c, {"name", "members"}, "category entry");
    Category cat{c.at("name").get<std::string>(), {}};
    for (const auto& m : c.at("members")) cat.members.push_back(id_of(m.get<std::string>()));
    cats.push_back(std::move(cat));
  }
  LabelId bg = j.contains("background") ? id_of(j.at("background").get<std::string>()) : LabelId{0};
  return LabelSet(std::move(labels), std::move(cats), bg);
}

DepthLayering parse_layering(const json& j) {
  if (j.is_string()) {
    if (j == "kitti") return DepthLayering::kitti();
    if (j == "cityscapes") return DepthLayering::cityscapes();
    throw InvalidInput("unknown depth layering preset " + j.dump());
  }
  check_keys(j, {"lower_bounds_m"}, "depth_layering");
  return DepthLayering(j.at("lower_bounds_m").get<std::vector<double>>());
}

TemplateConfig parse_templates(const json& j) {
  check_keys(j, {"reference_depth_class", "min_size", "max_size", "sizes"}, "templates");
  TemplateConfig t = TemplateConfig::defaults();
  read_opt(j, "reference_depth_class", t.reference_depth_class);
  read_opt(j, "min_size", t.min_size);
  read_opt(j, "max_size", t.max_size);
  if (j.contains("sizes")) {
    for (const auto& [name, wh] : j.at("sizes").items()) {
      if (!wh.is_array() || wh.size() != 2) throw InvalidInput("template size for '" + name + "' must be [w, h]");
      CategoryTemplateSize s{name, wh[0].get<int>(), wh[1].get<int>()};
      bool replaced = false;
      for (auto& existing : t.sizes) {
        if (existing.category == name) {
          existing = s;
          replaced = true;
        }
      }
      if (!replaced) t.sizes.push_back(s);
    }
  }
  t.validate();
  return t;
}

PipelineConfig parse_pipeline(const json& j) {
  check_keys(j,
             {"score_threshold", "depth_tolerance", "agreement_deg", "bias_threshold", "search_factor",
              "fusion", "min_pixels", "min_direction_magnitude", "threads"},
             "pipeline");
  PipelineConfig p;
  read_opt(j, "score_threshold", p.score_threshold);
  read_opt(j, "depth_tolerance", p.depth_tolerance);
  read_opt(j, "agreement_deg", p.agreement_deg);
  read_opt(j, "bias_threshold", p.bias_threshold);
  read_opt(j, "search_factor", p.search_factor);
  read_opt(j, "fusion", p.fusion);
  read_opt(j, "min_pixels", p.min_pixels);
  read_opt(j, "min_direction_magnitude", p.min_direction_magnitude);
  read_opt(j, "threads", p.threads);
  return p;
}

NoiseSpec parse_noise_object(const json& j) {
  check_keys(j,
             {"direction_flip_p", "direction_soften_sigma", "depth_jitter_p", "semantic_flip_p",
              "boundary_erode_px", "seed"},
             "noise");
  NoiseSpec n;
  read_opt(j, "direction_flip_p", n.direction_flip_p);
  read_opt(j, "direction_soften_sigma", n.direction_soften_sigma);
  read_opt(j, "depth_jitter_p", n.depth_jitter_p);
  read_opt(j, "semantic_flip_p", n.semantic_flip_p);
  read_opt(j, "boundary_erode_px", n.boundary_erode_px);
  read_opt(j, "seed", n.seed);
  n.validate();
  return n;
}

}  // namespace

namespace {

Config parse_config_unchecked(const json& doc) {
  check_schema(doc);
  check_keys(doc, {"schema_version", "preset", "labels", "depth_layering", "direction_bins", "templates",
                   "pipeline", "noise"},
             "config");
  Config cfg;
  if (doc.contains("preset")) {
    cfg.model.labels = parse_labels(doc.at("preset"));
    cfg.model.layering = parse_layering(doc.at("preset"));
  }
  if (doc.contains("labels")) cfg.model.labels = parse_labels(doc.at("labels"));
  if (doc.contains("depth_layering")) cfg.model.layering = parse_layering(doc.at("depth_layering"));
  if (doc.contains("direction_bins")) cfg.model.bins = DirectionBinning(doc.at("direction_bins").get<int>());
  if (doc.contains("pipeline")) cfg.pipeline = parse_pipeline(doc.at("pipeline"));
  if (doc.contains("templates")) cfg.pipeline.templates = parse_templates(doc.at("templates"));
  if (doc.contains("noise")) cfg.noise = parse_noise_object(doc.at("noise"));
  // Defaults for categories the label set lacks are dropped; explicit ones must name a category.
  std::set<std::string> explicit_sizes;
  if (doc.contains("templates") && doc.at("templates").contains("sizes")) {
    for (const auto& [name, _] : doc.at("templates").at("sizes").items()) explicit_sizes.insert(name);
  }
  auto& sizes = cfg.pipeline.templates.sizes;
  std::erase_if(sizes, [&](const CategoryTemplateSize& s) {
    for (const auto& c : cfg.model.labels.categories()) {
      if (c.name == s.category) return false;
    }
    if (explicit_sizes.contains(s.category)) throw InvalidInput("unknown category '" + s.category + "' in templates");
    return true;
  });
  for (const auto& c : cfg.model.labels.categories()) cfg.pipeline.templates.size_for(c.name);
  cfg.pipeline.validate();
  return cfg;
}

}  // namespace

Config parse_config(const json& doc) {
  try {
    return parse_config_unchecked(doc);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed config: ") + e.what());
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

Config load_config(const std::filesystem::path& path) { return parse_config(read_json_file(path)); }

NoiseSpec parse_noise(const json& doc) {
  check_schema(doc);
  try {
    if (doc.contains("noise")) {
      check_keys(doc, {"schema_version", "noise"}, "noise document");
      return parse_noise_object(doc.at("noise"));
    }
    json body = doc;
    body.erase("schema_version");
    return parse_noise_object(body);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed noise spec: ") + e.what());
  }
}

NoiseSpec load_noise(const std::filesystem::path& path) { return parse_noise(read_json_file(path)); }

json to_json(const Config& cfg) {
  json labels;
  for (const auto& l : cfg.model.labels.labels()) {
    labels["labels"].push_back({{"id", l.id}, {"name", l.name}, {"is_object", l.is_object}});
  }
  for (const auto& c : cfg.model.labels.categories()) {
    json members = json::array();
    for (LabelId m : c.members) members.push_back(cfg.model.labels.label(m).name);
    labels["categories"].push_back({{"name", c.name}, {"members", members}});
  }
  labels["background"] = cfg.model.labels.label(cfg.model.labels.background_id()).name;
  json sizes;
  for (const auto& s : cfg.pipeline.templates.sizes) sizes[s.category] = {s.base_width, s.base_height};
  const auto& p = cfg.pipeline;
  const auto& n = cfg.noise;
  return {
      {"schema_version", kSchemaVersion},
      {"labels", labels},
      {"depth_layering", {{"lower_bounds_m", cfg.model.layering.lower_bounds()}}},
      {"direction_bins", cfg.model.bins.size()},
      {"templates",
       {{"reference_depth_class", p.templates.reference_depth_class},
        {"min_size", p.templates.min_size},
        {"max_size", p.templates.max_size},
        {"sizes", sizes}}},
      {"pipeline",
       {{"score_threshold", p.score_threshold},
        {"depth_tolerance", p.depth_tolerance},
        {"agreement_deg", p.agreement_deg},
        {"bias_threshold", p.bias_threshold},
        {"search_factor", p.search_factor},
        {"fusion", p.fusion},
        {"min_pixels", p.min_pixels},
        {"min_direction_magnitude", p.min_direction_magnitude},
        {"threads", p.threads}}},
      {"noise",
       {{"direction_flip_p", n.direction_flip_p},
        {"direction_soften_sigma", n.direction_soften_sigma},
        {"depth_jitter_p", n.depth_jitter_p},
        {"semantic_flip_p", n.semantic_flip_p},
        {"boundary_erode_px", n.boundary_erode_px},
        {"seed", n.seed}}},
  };
}

}  // namespace ispc
