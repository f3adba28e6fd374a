#include <doctest.h>

#include <fstream>
#include <set>

#include "fixtures.hpp"
#include "ispc/config.hpp"
#include "ispc/errors.hpp"
#include "ispc/parallel.hpp"
#include "ispc/raster_io.hpp"
#include "ispc/render.hpp"

using namespace ispc;
namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

SyntheticScene sample_scene() {
  const auto labels = LabelSet::cityscapes();
  return fixtures::scene(80, 60, {fixtures::rect(labels.label_id("car"), 11.0, 3, 3, 21, 11),
                                  fixtures::rect(labels.label_id("person"), 6.0, 30, 2, 9, 25)});
}

}  // namespace

TEST_CASE("raster file header layout") {
  RasterFile f;
  f.width = 3;
  f.height = 2;
  f.channels = 1;
  f.u8 = {1, 2, 3, 4, 5, 6};
  const auto bytes = encode_raster_file(f);
  REQUIRE(bytes.size() == 16 + 6);
  CHECK(std::string(bytes.begin(), bytes.begin() + 5) == "ISPC1");
  CHECK(bytes[5] == 3);
  CHECK(bytes[9] == 2);
  CHECK(bytes[13] == 1);
  CHECK(bytes[15] == 0);
  CHECK(bytes[16] == 1);

  RasterFile g;
  g.width = 1;
  g.height = 1;
  g.channels = 2;
  g.kind = ElementKind::kF32;
  g.f32 = {1.0f, 0.5f};
  const auto gb = encode_raster_file(g);
  REQUIRE(gb.size() == 16 + 8);
  // 1.0f little-endian
  CHECK(gb[16] == 0x00);
  CHECK(gb[19] == 0x3f);
  const auto back = decode_raster_file(gb, "g");
  CHECK(back.f32 == g.f32);
  CHECK(back.channels == 2);
}

TEST_CASE("raster decode errors name the file") {
  RasterFile f;
  f.width = 4;
  f.height = 4;
  f.channels = 1;
  f.u8.assign(16, 7);
  auto bytes = encode_raster_file(f);
  auto expect_format = [](const std::vector<std::uint8_t>& b, const char* needle) {
    try {
      decode_raster_file(b, "scene.sem.ispc");
      FAIL("expected a format error");
    } catch (const FormatError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("scene.sem.ispc") != std::string::npos);
      CHECK(msg.find(needle) != std::string::npos);
    }
  };
  auto truncated = bytes;
  truncated.pop_back();
  expect_format(truncated, "payload");
  auto magic = bytes;
  magic[0] = 'X';
  expect_format(magic, "magic");
  expect_format({bytes.begin(), bytes.begin() + 7}, "truncated");
  auto trailing = bytes;
  trailing.push_back(0);
  expect_format(trailing, "payload");
  auto kind = bytes;
  kind[15] = 9;
  expect_format(kind, "kind");
}

TEST_CASE("triple round trip is bit exact") {
  fixtures::TempDir dir("triple");
  const auto s = sample_scene();
  const auto paths = TriplePaths::from_prefix(dir / "a");
  write_triple(s.triple, paths);
  const auto back = read_triple(paths);
  CHECK((back.semantic == s.triple.semantic).all());
  CHECK((back.depth == s.triple.depth).all());
  CHECK((back.direction == s.triple.direction).all());

  write_triple(back, TriplePaths::from_prefix(dir / "b"));
  for (const char* ext : {".sem.ispc", ".depth.ispc", ".dir.ispc"}) {
    CHECK(slurp(dir / (std::string("a") + ext)) == slurp(dir / (std::string("b") + ext)));
  }

  // corrupted direction file: format error, no partial result
  auto bytes = slurp(paths.direction);
  bytes.resize(bytes.size() - 3);
  spit(paths.direction, bytes);
  CHECK_THROWS_AS(read_triple(paths), FormatError);
}

TEST_CASE("triple dimension mismatch names both files") {
  fixtures::TempDir dir("mismatch");
  const auto s = sample_scene();
  write_triple(s.triple, TriplePaths::from_prefix(dir / "a"));
  auto small = s.triple;
  small.semantic = Raster<LabelId>::Zero(10, 10);
  small.depth = Raster<DepthClass>::Zero(10, 10);
  small.direction = ScoreVolume::Zero(100, 8);
  write_triple(small, TriplePaths::from_prefix(dir / "b"));
  fs::copy_file(dir / "b.depth.ispc", dir / "a.depth.ispc", fs::copy_options::overwrite_existing);
  try {
    read_triple(TriplePaths::from_prefix(dir / "a"));
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("a.sem.ispc") != std::string::npos);
    CHECK(msg.find("a.depth.ispc") != std::string::npos);
  }
  CHECK_THROWS_AS(read_triple(TriplePaths::from_prefix(dir / "missing")), FormatError);
}

TEST_CASE("annotation and labeling round trips") {
  fixtures::TempDir dir("ann");
  const auto labels = LabelSet::cityscapes();
  const auto kitti = DepthLayering::kitti();
  const auto s = sample_scene();
  write_annotation(s.annotation, AnnotationPaths::from_prefix(dir / "gt"));
  const auto ap = AnnotationPaths::from_prefix(dir / "gt");
  const auto ann = read_annotation(ap.instances, ap.semantic, ap.depths);
  CHECK((ann.instance_ids == s.annotation.instance_ids).all());
  CHECK((ann.semantic == s.annotation.semantic).all());
  CHECK(ann.instance_depths == s.annotation.instance_depths);

  // wide ids switch to float storage
  auto wide = s.annotation;
  wide.instance_ids = (wide.instance_ids == 1).select(300, wide.instance_ids);
  wide.instance_depths = {{300, 11.0}, {2, 6.0}};
  write_annotation(wide, AnnotationPaths::from_prefix(dir / "wide"));
  const auto wp = AnnotationPaths::from_prefix(dir / "wide");
  CHECK(read_raster_file(wp.instances).kind == ElementKind::kF32);
  CHECK((read_annotation(wp.instances, wp.semantic, wp.depths).instance_ids == wide.instance_ids).all());

  const auto l = segment_scene(s.triple, labels, kitti, DirectionBinning{}, {});
  REQUIRE(l.instances.size() == 2);
  const auto lp = LabelingPaths::from_prefix(dir / "pred");
  write_labeling(l, lp, labels);
  const auto back = read_labeling(lp, labels);
  CHECK((back.instance_ids == l.instance_ids).all());
  CHECK((back.background_semantic == l.background_semantic).all());
  REQUIRE(back.instances.size() == l.instances.size());
  for (std::size_t i = 0; i < l.instances.size(); ++i) {
    CHECK(back.instances[i].id == l.instances[i].id);
    CHECK(back.instances[i].semantic == l.instances[i].semantic);
    CHECK(back.instances[i].depth_m == l.instances[i].depth_m);
    CHECK(back.instances[i].score == l.instances[i].score);
    CHECK(back.instances[i].pixel_count == l.instances[i].pixel_count);
    CHECK(back.instances[i].center == l.instances[i].center);
  }
  const auto j = labeling_records_to_json(l, labels);
  CHECK(j.at("instances").at(0).at("label") == "car");

  CHECK(depths_from_json(depths_to_json({{1, 2.5}, {12, 40.0}})) == std::map<InstanceId, double>{{1, 2.5}, {12, 40.0}});
  CHECK_THROWS(depths_from_json(nlohmann::json::parse(R"({"a": 1})")));
  CHECK_THROWS(depths_from_json(nlohmann::json::parse(R"({"1": "far"})")));
}

TEST_CASE("atomic writes leave no temporaries behind") {
  fixtures::TempDir dir("atomic");
  atomic_write(dir / "x.txt", std::string("hello"));
  atomic_write(dir / "x.txt", std::string("world"));
  std::ifstream in(dir / "x.txt");
  std::string text;
  in >> text;
  CHECK(text == "world");
  int files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir.path)) ++files;
  CHECK(files == 1);
  CHECK_THROWS(atomic_write(dir / "no/such/dir/x.txt", std::string("x")));
  CHECK_FALSE(fs::exists(dir / "no"));
}

TEST_CASE("config parsing") {
  const auto def = parse_config(nlohmann::json{{"schema_version", 1}});
  CHECK(def.model.labels.size() == 19);
  CHECK(def.model.layering.num_classes() == 19);
  CHECK(def.pipeline.score_threshold == 0.3);

  const auto cfg = parse_config(nlohmann::json::parse(R"({
    "schema_version": 1,
    "preset": "kitti",
    "templates": {"sizes": {"car": [15, 7]}, "min_size": 3},
    "pipeline": {"fusion": false, "min_pixels": 4},
    "noise": {"direction_flip_p": 0.1, "seed": 5}
  })"));
  CHECK(cfg.model.labels.size() == 2);
  CHECK(cfg.pipeline.templates.size_for("car").base_width == 15);
  CHECK(cfg.pipeline.templates.min_size == 3);
  CHECK_FALSE(cfg.pipeline.fusion);
  CHECK(cfg.pipeline.min_pixels == 4);
  CHECK(cfg.noise.direction_flip_p == 0.1);
  CHECK(cfg.noise.seed == 5);

  // round trip through the emitted document
  const auto again = parse_config(to_json(cfg));
  CHECK(to_json(again) == to_json(cfg));

  const auto coarse = parse_config(nlohmann::json::parse(
      R"({"schema_version": 1, "depth_layering": {"lower_bounds_m": [0, 10, 30]},
          "templates": {"reference_depth_class": 2}})"));
  CHECK(coarse.model.layering.num_classes() == 3);

  CHECK_THROWS_AS(parse_config(nlohmann::json::object()), InvalidInput);
  CHECK_THROWS_AS(parse_config(nlohmann::json{{"schema_version", 2}}), InvalidInput);
  CHECK_THROWS_AS(parse_config(nlohmann::json{{"schema_version", 1}, {"colour", 3}}), InvalidInput);
  CHECK_THROWS_AS(parse_config(nlohmann::json::parse(R"({"schema_version": 1, "pipeline": {"fusion": "yes"}})")),
                  InvalidInput);
  CHECK_THROWS_AS(parse_config(nlohmann::json::parse(R"({"schema_version": 1, "noise": {"depth_jitter_p": 2}})")),
                  InvalidInput);
  CHECK_THROWS_AS(parse_config(nlohmann::json::parse(R"({"schema_version": 1, "direction_bins": "eight"})")),
                  InvalidInput);
  CHECK_THROWS_AS(parse_config(nlohmann::json::parse(R"({"schema_version": 1, "templates": {"sizes": {"boat": [5, 5]}}})")),
                  InvalidInput);

  CHECK(parse_noise(nlohmann::json::parse(R"({"schema_version": 1, "seed": 9})")).seed == 9);
  CHECK(parse_noise(nlohmann::json::parse(R"({"schema_version": 1, "noise": {"seed": 8}})")).seed == 8);

  fixtures::TempDir dir("cfg");
  {
    std::ofstream(dir / "bad.json") << "{ not json";
  }
  CHECK_THROWS_AS(load_config(dir / "bad.json"), FormatError);
  CHECK_THROWS_AS(load_config(dir / "absent.json"), FormatError);
}

TEST_CASE("scene synthesis") {
  const auto labels = LabelSet::cityscapes();
  const LabelId car = labels.label_id("car");

  // front rectangle keeps its full mask; back one is recentred on what remains
  const auto s = fixtures::scene(60, 30, {fixtures::rect(car, 20.0, 5, 5, 20, 10, 0), fixtures::rect(car, 10.0, 15, 5, 20, 10, 1)});
  REQUIRE(s.annotation.instance_depths.size() == 2);
  std::map<double, InstanceId> by_depth;
  for (const auto& [id, d] : s.annotation.instance_depths) by_depth[d] = id;
  CHECK((s.annotation.instance_ids == by_depth[10.0]).count() == 200);
  CHECK((s.annotation.instance_ids == by_depth[20.0]).count() == 100);
  std::vector<PixelCoord> back;
  for (int r = 0; r < 30; ++r)
    for (int c = 0; c < 60; ++c)
      if (s.annotation.instance_ids(r, c) == by_depth[20.0]) back.push_back({c, r});
  CHECK(visible_center(back) == PixelCoord{10, 10});  // cols 5..14 -> 9.5 -> 10

  // fully covered instances are dropped
  const auto hidden = fixtures::scene(40, 20, {fixtures::rect(car, 20.0, 10, 5, 5, 5, 0), fixtures::rect(car, 10.0, 5, 2, 20, 15, 1)});
  CHECK(hidden.annotation.instance_depths.size() == 1);
  CHECK(hidden.annotation.instance_ids.maxCoeff() == 1);

  // fifty separate cars
  std::vector<SyntheticInstance> many;
  for (int i = 0; i < 50; ++i) many.push_back(fixtures::rect(car, 11.0, (i % 10) * 25, (i / 10) * 15, 21, 11));
  const auto fifty = fixtures::scene(250, 75, many);
  CHECK(fifty.annotation.instance_depths.size() == 50);

  // shapes
  SyntheticInstance e{Shape::kEllipse, car, 11.0, 0, 0, 11, 7, 0};
  const auto ell = rasterize(e);
  CHECK(ell.size() < 77u);
  CHECK(std::find(ell.begin(), ell.end(), PixelCoord{0, 0}) == ell.end());
  CHECK(std::find(ell.begin(), ell.end(), PixelCoord{5, 3}) != ell.end());
  SyntheticInstance l{Shape::kLShape, car, 11.0, 0, 0, 10, 10, 0};
  CHECK(rasterize(l).size() == 75u);

  // invalid specs
  CHECK_THROWS_AS(synthesize_scene({20, 20, {fixtures::rect(car, 11.0, 15, 0, 10, 5)}}, labels, DepthLayering::kitti(), DirectionBinning{}),
                  InvalidInput);
  CHECK_THROWS_AS(synthesize_scene({20, 20, {fixtures::rect(car, -1.0, 0, 0, 10, 5)}}, labels, DepthLayering::kitti(), DirectionBinning{}),
                  InvalidInput);
  CHECK_THROWS_AS(synthesize_scene({20, 20, {fixtures::rect(0, 5.0, 0, 0, 10, 5)}}, labels, DepthLayering::kitti(), DirectionBinning{}),
                  InvalidInput);

  // JSON round trip
  const SceneSpec spec{60, 30, {fixtures::rect(car, 20.0, 5, 5, 20, 10, 0), {Shape::kLShape, labels.label_id("bus"), 9.0, 30, 2, 21, 15, 2}}};
  const auto j = to_json(spec, labels);
  CHECK(to_json(parse_scene_spec(j, labels), labels) == j);
}

TEST_CASE("random scenes are reproducible and separated") {
  const auto labels = LabelSet::cityscapes();
  const auto kitti = DepthLayering::kitti();
  const auto cfg = TemplateConfig::defaults();
  const auto a = random_scene(5, {}, labels, kitti, cfg);
  const auto b = random_scene(5, {}, labels, kitti, cfg);
  CHECK(to_json(a, labels) == to_json(b, labels));
  CHECK(to_json(a, labels) != to_json(random_scene(6, {}, labels, kitti, cfg), labels));
  for (std::size_t i = 0; i < a.instances.size(); ++i) {
    for (std::size_t j = i + 1; j < a.instances.size(); ++j) {
      const auto& p = a.instances[i];
      const auto& q = a.instances[j];
      const int gap_x = std::max(p.x, q.x) - std::min(p.x + p.width, q.x + q.width);
      const int gap_y = std::max(p.y, q.y) - std::min(p.y + p.height, q.y + q.height);
      CHECK((gap_x > std::max(p.width, q.width) || gap_y > std::max(p.height, q.height)));
    }
  }
}

TEST_CASE("render labeling: distinct colors over gray, deterministic") {
  const auto labels = LabelSet::cityscapes();
  const auto kitti = DepthLayering::kitti();
  const auto s = synthesize_scene(random_scene(21, {}, labels, kitti, TemplateConfig::defaults()), labels, kitti,
                                  DirectionBinning{});
  const auto l = segment_scene(s.triple, labels, kitti, DirectionBinning{}, {});
  REQUIRE(l.instances.size() > 3);
  auto img = render_labeling(l);
  std::set<std::array<std::uint8_t, 3>> colors;
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      const auto* p = img.at(r, c);
      if (p[0] == p[1] && p[1] == p[2]) {
        CHECK(l.instance_ids(r, c) == 0);
        continue;
      }
      colors.insert({p[0], p[1], p[2]});
    }
  }
  CHECK(colors.size() == l.instances.size());
  CHECK(encode_png(render_labeling(l)) == encode_png(img));

  SceneLabeling empty{Raster<InstanceId>::Zero(20, 10), {}, Raster<LabelId>::Zero(20, 10)};
  auto gray = render_labeling(empty);
  for (int i = 0; i < gray.width * gray.height; ++i) {
    CHECK(gray.pixels[3 * i] == gray.pixels[3 * i + 1]);
    CHECK(gray.pixels[3 * i + 1] == gray.pixels[3 * i + 2]);
  }

  const auto png = encode_png(img);
  REQUIRE(png.size() > 8);
  CHECK(png[1] == 'P');
  CHECK(png[2] == 'N');
  CHECK(png[3] == 'G');

  // palette is a function of the id alone
  const auto p1 = instance_palette({1, 2, 3});
  const auto p2 = instance_palette({3, 2, 1});
  CHECK(p1[0] == p2[2]);
}

TEST_CASE("render score maps, fields and templates") {
  const auto labels = LabelSet::cityscapes();
  const auto kitti = DepthLayering::kitti();
  const auto s = sample_scene();
  const auto field = decode_field(s.triple, DirectionBinning{});
  const auto maps = score_maps(s.triple, field, labels, kitti, TemplateConfig::defaults());
  const auto g = render_score_map(maps[0].effective);
  CHECK(g.channels == 1);
  CHECK(g.width == 80);
  const auto f = render_field(field);
  CHECK(f.channels == 3);
  CHECK(f.pixels[0] == 0);  // background is black
  const auto t = render_template(synthesize_template(0, 8, TemplateConfig::defaults(), labels, kitti));
  CHECK(t.width == 21);
  fixtures::TempDir dir("png");
  write_png(dir / "t.png", t);
  CHECK(fs::file_size(dir / "t.png") > 0);
}

TEST_CASE("parallel_for runs every index and surfaces errors") {
  std::vector<int> seen(1000, 0);
  parallel_for(seen.size(), 4, [&](std::size_t i) { seen[i] += 1; });
  CHECK(std::all_of(seen.begin(), seen.end(), [](int v) { return v == 1; }));
  CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                    if (i == 7) throw InvalidInput("seven");
                  }),
                  InvalidInput);
  CHECK(resolve_threads(3) >= 1);
  CHECK(resolve_threads(0) >= 1);
  ::setenv("ISPC_THREADS", "2", 1);
  CHECK(resolve_threads(8) == 2);
  ::unsetenv("ISPC_THREADS");
  CHECK(resolve_threads(8) == 8);
}
