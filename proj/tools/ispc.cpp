// Command-line front end: encode, segment, evaluate, corrupt, synth, render.
//
// Exit codes: 0 success, 2 usage error, 3 format error, 4 pipeline error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ispc/config.hpp"
#include "ispc/corruption.hpp"
#include "ispc/errors.hpp"
#include "ispc/eval_metrics.hpp"
#include "ispc/gt_encoder.hpp"
#include "ispc/instance_pipeline.hpp"
#include "ispc/parallel.hpp"
#include "ispc/raster_io.hpp"
#include "ispc/render.hpp"
#include "ispc/synth.hpp"

namespace fs = std::filesystem;
using namespace ispc;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitFormat = 3;
constexpr int kExitPipeline = 4;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Config config_from(const std::string& path) { return path.empty() ? Config{} : load_config(path); }

void encode_cmd(const std::string& annotation, const std::string& depths, const std::string& out,
                const std::string& config) {
  const Config cfg = config_from(config);
  const auto ap = AnnotationPaths::from_prefix(annotation);
  const InstanceAnnotation ann = read_annotation(ap.instances, ap.semantic, depths);
  const ChannelTriple triple = encode_scene(ann, cfg.model.labels, cfg.model.layering, cfg.model.bins);
  write_triple(triple, TriplePaths::from_prefix(out));
}

void segment_cmd(const std::vector<std::string>& inputs, const std::string& out, const std::string& config,
                 int jobs) {
  Config cfg = config_from(config);
  const int workers = resolve_threads(jobs);
  std::vector<fs::path> targets;
  if (inputs.size() == 1) {
    targets.emplace_back(out);
  } else {
    fs::create_directories(out);
    for (const auto& in : inputs) targets.push_back(fs::path(out) / fs::path(in).filename());
  }
  // Scenes in parallel use one thread each; a single scene gets the workers.
  PipelineConfig pc = cfg.pipeline;
  pc.threads = inputs.size() == 1 ? workers : 1;
  parallel_for(inputs.size(), workers, [&](std::size_t i) {
    const ChannelTriple triple = read_triple(TriplePaths::from_prefix(inputs[i]));
    const SceneLabeling labeling = segment_scene(triple, cfg.model.labels, cfg.model.layering, cfg.model.bins, pc);
    write_labeling(labeling, LabelingPaths::from_prefix(targets[i]), cfg.model.labels);
  });
}

void evaluate_cmd(const std::vector<std::string>& inputs, const std::string& out, const std::string& csv,
                  const std::string& config, int jobs) {
  if (inputs.size() % 2 != 0) throw UsageError("evaluate expects <pred> <gt> pairs");
  const Config cfg = config_from(config);
  const int workers = resolve_threads(jobs);
  std::vector<EvalCase> cases(inputs.size() / 2);
  parallel_for(cases.size(), workers, [&](std::size_t i) {
    const SceneLabeling pred = read_labeling(LabelingPaths::from_prefix(inputs[2 * i]), cfg.model.labels);
    const auto gp = AnnotationPaths::from_prefix(inputs[2 * i + 1]);
    const InstanceAnnotation gt = read_annotation(gp.instances, gp.semantic, gp.depths);
    cases[i] = EvalCase::from(pred, gt);
  });
  const MetricReport report = evaluate(cases, cfg.model.labels, workers);
  const auto j = report_to_json(report);
  atomic_write(out, j.dump(2) + "\n");
  if (!csv.empty()) {
    std::ostringstream os;
    os.precision(17);
    os << "metric,value\n";
    for (const char* block : {"zhang", "ap", "depth"}) {
      for (const auto& [k, v] : j.at(block).items()) {
        if (v.is_number()) os << block << "." << k << "," << v.get<double>() << "\n";
      }
    }
    for (const char* fam : {"IoU_class", "iIoU_class"}) {
      for (const auto& [k, v] : j.at("pixel").at(fam).at("per_label").items()) {
        os << "pixel." << fam << "." << k << "," << v.get<double>() << "\n";
      }
      os << "pixel." << fam << ".mean," << j.at("pixel").at(fam).at("mean").get<double>() << "\n";
    }
    atomic_write(csv, os.str());
  }
}

void corrupt_cmd(const std::string& in, const std::string& noise, const std::string& out,
                 const std::string& config) {
  const Config cfg = config_from(config);
  const NoiseSpec spec = noise.empty() ? cfg.noise : load_noise(noise);
  const ChannelTriple triple = read_triple(TriplePaths::from_prefix(in));
  write_triple(corrupt(triple, spec, cfg.model.labels, cfg.model.layering), TriplePaths::from_prefix(out));
}

void synth_cmd(const std::string& scene, std::optional<std::uint64_t> random_seed, const std::string& out,
               const std::string& config) {
  const Config cfg = config_from(config);
  SceneSpec spec;
  if (random_seed) {
    spec = random_scene(*random_seed, {}, cfg.model.labels, cfg.model.layering, cfg.pipeline.templates);
    atomic_write(out + ".scene.json", to_json(spec, cfg.model.labels).dump(2) + "\n");
  } else {
    if (scene.empty()) throw UsageError("synth needs a scene file or --random");
    spec = parse_scene_spec(read_json_file(scene), cfg.model.labels);
  }
  const SyntheticScene s = synthesize_scene(spec, cfg.model.labels, cfg.model.layering, cfg.model.bins);
  write_annotation(s.annotation, AnnotationPaths::from_prefix(out));
  write_triple(s.triple, TriplePaths::from_prefix(out));
}

void render_cmd(const std::string& input, std::string kind, const std::string& out, const std::string& config,
                const std::string& category, int depth_class) {
  const Config cfg = config_from(config);
  const auto& m = cfg.model;
  if (kind == "auto") {
    if (fs::exists(LabelingPaths::from_prefix(input).records)) kind = "labeling";
    else if (fs::exists(TriplePaths::from_prefix(input).direction)) kind = "field";
    else throw UsageError("cannot tell what '" + input + "' is; pass --kind");
  }
  Image img;
  if (kind == "labeling") {
    img = render_labeling(read_labeling(LabelingPaths::from_prefix(input), m.labels));
  } else if (kind == "field") {
    img = render_field(decode_field<double>(read_triple(TriplePaths::from_prefix(input)), m.bins));
  } else if (kind == "scores") {
    const ChannelTriple triple = read_triple(TriplePaths::from_prefix(input));
    const DirectionField field = decode_field<double>(triple, m.bins);
    const CategoryIndex cat = m.labels.category_index(category);
    const auto maps = score_maps(triple, field, m.labels, m.layering, cfg.pipeline.templates, 1);
    ScoreMap eff{cat, Raster<double>::Constant(triple.height(), triple.width(), ScoreMap::kInvalid)};
    for (const auto& cs : maps) {
      if (cs.category == cat) eff = cs.effective;
    }
    img = render_score_map(eff);
  } else if (kind == "template") {
    img = render_template(synthesize_template(m.labels.category_index(category), static_cast<DepthClass>(depth_class),
                                              cfg.pipeline.templates, m.labels, m.layering));
  } else {
    throw UsageError("unknown render kind '" + kind + "'");
  }
  write_png(out, img);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Instance segmentation from semantic, depth and direction channels"};
  app.require_subcommand(1);

  std::string config, out;
  int jobs = 0;

  auto* encode = app.add_subcommand("encode", "Encode an instance annotation into a channel triple");
  std::string annotation, depths;
  encode->add_option("annotation", annotation, "Annotation prefix (<p>.inst.ispc, <p>.sem.ispc)")->required();
  encode->add_option("depths", depths, "Instance depths JSON {id: meters}")->required();
  encode->add_option("-o,--output", out, "Output triple prefix")->required();
  encode->add_option("-c,--config", config, "Config JSON");

  auto* segment = app.add_subcommand("segment", "Segment instances from channel triples");
  std::vector<std::string> triples;
  segment->add_option("triples", triples, "Triple prefixes")->required();
  segment->add_option("-o,--output", out, "Labeling prefix, or directory for several inputs")->required();
  segment->add_option("-c,--config", config, "Config JSON");
  segment->add_option("-j,--jobs", jobs, "Worker threads (0 = all cores, capped by ISPC_THREADS)");

  auto* evaluate_app = app.add_subcommand("evaluate", "Evaluate labelings against annotations");
  std::vector<std::string> pairs;
  std::string csv;
  evaluate_app->add_option("pairs", pairs, "<pred labeling> <gt annotation> pairs")->required();
  evaluate_app->add_option("-o,--output", out, "Report JSON")->required();
  evaluate_app->add_option("--csv", csv, "Also write a metric,value CSV");
  evaluate_app->add_option("-c,--config", config, "Config JSON");
  evaluate_app->add_option("-j,--jobs", jobs, "Worker threads");

  auto* corrupt_app = app.add_subcommand("corrupt", "Perturb a channel triple with seeded noise");
  std::string triple_in, noise;
  corrupt_app->add_option("triple", triple_in, "Triple prefix")->required();
  corrupt_app->add_option("-n,--noise", noise, "Noise JSON (defaults to the config's noise section)");
  corrupt_app->add_option("-o,--output", out, "Output triple prefix")->required();
  corrupt_app->add_option("-c,--config", config, "Config JSON");

  auto* synth = app.add_subcommand("synth", "Rasterize a synthetic scene into annotation and triple");
  std::string scene;
  std::optional<std::uint64_t> seed;
  synth->add_option("scene", scene, "Scene spec JSON");
  synth->add_option("--random", seed, "Generate a random scene from this seed instead");
  synth->add_option("-o,--output", out, "Output prefix")->required();
  synth->add_option("-c,--config", config, "Config JSON");

  auto* render = app.add_subcommand("render", "Render a labeling, field, score map or template to PNG");
  std::string input, kind = "auto", category = "car";
  int depth_class = 8;
  render->add_option("input", input, "Labeling or triple prefix (unused for templates)");
  render->add_option("-o,--output", out, "PNG path")->required();
  render->add_option("-k,--kind", kind, "auto|labeling|field|scores|template");
  render->add_option("--category", category, "Category for scores/template");
  render->add_option("--depth-class", depth_class, "Depth class for template");
  render->add_option("-c,--config", config, "Config JSON");

  auto* config_app = app.add_subcommand("config", "Print the effective config as JSON");
  config_app->add_option("-c,--config", config, "Config JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*encode) encode_cmd(annotation, depths, out, config);
    else if (*segment) segment_cmd(triples, out, config, jobs);
    else if (*evaluate_app) evaluate_cmd(pairs, out, csv, config, jobs);
    else if (*corrupt_app) corrupt_cmd(triple_in, noise, out, config);
    else if (*synth) synth_cmd(scene, seed, out, config);
    else if (*render) render_cmd(input, kind, out, config, category, depth_class);
    else if (*config_app) std::cout << to_json(config_from(config)).dump(2) << "\n";
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kExitFormat;
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPipeline;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPipeline;
  }
  return 0;
}
