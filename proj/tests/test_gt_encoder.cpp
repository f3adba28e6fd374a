#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "ispc/errors.hpp"
#include "ispc/gt_encoder.hpp"

using namespace ispc;

namespace {

// Independent oracle: brute-force nearest bin center by angular distance.
int nearest_bin(double angle_deg) {
  int best = 0;
  double best_d = 1e9;
  for (int k = 0; k < 8; ++k) {
    double d = std::fmod(std::abs(angle_deg - 45.0 * k) + 360.0, 360.0);
    d = std::min(d, 360.0 - d);
    if (d < best_d) best_d = d, best = k;
  }
  return best;
}

int hot_bin(const ChannelTriple& t, int row, int col) {
  int idx = -1;
  for (int k = 0; k < t.num_bins(); ++k) {
    if (t.scores(row, col)(k) == 1.0f) idx = k;
  }
  return idx;
}

}  // namespace

TEST_CASE("visible center") {
  std::vector<PixelCoord> square;
  for (int r = 10; r <= 12; ++r)
    for (int c = 10; c <= 12; ++c) square.push_back({c, r});
  CHECK(visible_center(square) == PixelCoord{11, 11});

  std::vector<PixelCoord> split = {{0, 0}, {4, 0}};
  CHECK(visible_center(split) == PixelCoord{2, 0});

  // centroid (1/3, 1/3)
  std::vector<PixelCoord> ell = {{0, 0}, {0, 1}, {1, 0}};
  CHECK(visible_center(ell) == PixelCoord{0, 0});

  // half-way rounds away from zero: cols {0,1} -> 0.5 -> 1
  std::vector<PixelCoord> pair = {{0, 3}, {1, 3}};
  CHECK(visible_center(pair) == PixelCoord{1, 3});

  CHECK_THROWS_AS(visible_center({}), InvalidInput);
}

TEST_CASE("direction class encoding") {
  const DirectionBinning bins;
  CHECK(encode_direction_class({5, 5}, {9, 5}, bins) == 0);
  CHECK(encode_direction_class({5, 5}, {5, 1}, bins) == 2);
  CHECK(encode_direction_class({5, 5}, {9, 1}, bins) == 1);
  CHECK(encode_direction_class({5, 5}, {1, 5}, bins) == 4);
  CHECK(encode_direction_class({5, 5}, {5, 9}, bins) == 6);
  CHECK(encode_direction_class({5, 5}, {5, 5}, bins) == 0);

  // brute force over a ring of offsets against the nearest-center oracle
  for (int dr = -7; dr <= 7; ++dr) {
    for (int dc = -7; dc <= 7; ++dc) {
      if (dr == 0 && dc == 0) continue;
      const double a = std::atan2(-static_cast<double>(dr), static_cast<double>(dc)) * 180.0 / M_PI;
      // skip exact bin boundaries, where the oracle has two answers
      const double frac = std::fmod(std::abs(a) + 22.5, 45.0);
      if (std::abs(frac) < 1e-9) continue;
      CHECK(encode_direction_class({20, 20}, {20 + dc, 20 + dr}, bins) == nearest_bin(a));
    }
  }
}

TEST_CASE("encode one square car") {
  const auto labels = LabelSet::cityscapes();
  const auto kitti = DepthLayering::kitti();
  const auto s = fixtures::scene(30, 30, {fixtures::rect(labels.label_id("car"), 11.0, 5, 5, 10, 10)});
  const auto& t = s.triple;
  int n = 0;
  for (int r = 0; r < 30; ++r) {
    for (int c = 0; c < 30; ++c) {
      const bool inside = r >= 5 && r < 15 && c >= 5 && c < 15;
      if (inside) {
        ++n;
        CHECK(t.depth(r, c) == 8);
        CHECK(t.scores(r, c).sum() == 1.0f);
        CHECK((t.scores(r, c) > 0.0f).count() == 1);
      } else {
        CHECK(t.depth(r, c) == 0);
        CHECK(t.scores(r, c).isZero());
      }
    }
  }
  CHECK(n == 100);
  // centroid of 5..14 is 9.5 -> rounds to 10
  const PixelCoord c{10, 10};
  CHECK(hot_bin(t, 5, 5) == encode_direction_class({5, 5}, c, DirectionBinning{}));
  CHECK(hot_bin(t, 10, 5) == 0);   // left edge points right
  CHECK(hot_bin(t, 14, 10) == 2);  // bottom edge points up
  CHECK(hot_bin(t, 5, 10) == 6);   // top edge points down
  CHECK_NOTHROW(check_encoded_triple(t, labels, kitti));
}

TEST_CASE("empty scene encodes to background") {
  const auto s = fixtures::scene(16, 9, {});
  CHECK(s.triple.direction.isZero());
  CHECK((s.triple.depth == 0).all());
  CHECK((s.triple.semantic == 0).all());
}

TEST_CASE("adjacent cars encode opposing bins across the boundary") {
  const auto labels = LabelSet::cityscapes();
  const LabelId car = labels.label_id("car");
  const auto s = fixtures::scene(40, 20, {fixtures::rect(car, 11.0, 5, 5, 11, 9), fixtures::rect(car, 11.0, 16, 5, 11, 9)});
  const DirectionBinning bins;
  for (int r = 5; r < 14; ++r) {
    const int left = hot_bin(s.triple, r, 15);
    const int right = hot_bin(s.triple, r, 16);
    // left car's boundary pixels point back left (towards its center), right car's point right
    CHECK(bins.center(left).x() < 0.0);
    CHECK(bins.center(right).x() > 0.0);
    // mirror images of each other about the boundary
    CHECK(bins.center(left).y() == doctest::Approx(bins.center(right).y()));
  }
  CHECK(hot_bin(s.triple, 9, 15) == 4);
  CHECK(hot_bin(s.triple, 9, 16) == 0);
}

TEST_CASE("annotation validation") {
  const auto labels = LabelSet::cityscapes();
  const auto kitti = DepthLayering::kitti();
  InstanceAnnotation ann;
  ann.instance_ids = Raster<InstanceId>::Zero(4, 4);
  ann.semantic = Raster<LabelId>::Zero(4, 4);
  ann.instance_ids(1, 1) = 7;
  ann.semantic(1, 1) = labels.label_id("car");
  try {
    encode_scene(ann, labels, kitti, DirectionBinning{});
    FAIL("expected missing-depth error");
  } catch (const InvalidInput& e) {
    CHECK(std::string(e.what()).find("7") != std::string::npos);
  }
  ann.instance_depths[7] = 11.0;
  CHECK_NOTHROW(encode_scene(ann, labels, kitti, DirectionBinning{}));
  ann.semantic(1, 1) = labels.label_id("road");
  CHECK_THROWS_AS(encode_scene(ann, labels, kitti, DirectionBinning{}), InvalidInput);
  ann.semantic(1, 1) = labels.label_id("car");
  ann.instance_depths[7] = -1.0;
  CHECK_THROWS_AS(encode_scene(ann, labels, kitti, DirectionBinning{}), InvalidInput);
}

TEST_CASE("encoding invariants on random scenes") {
  const auto labels = LabelSet::cityscapes();
  const auto kitti = DepthLayering::kitti();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    RandomSceneOptions opts;
    opts.width = 320;
    opts.height = 200;
    opts.max_instances = 12;
    opts.separation = -0.5;  // allow overlaps
    opts.shapes = {Shape::kRectangle, Shape::kEllipse, Shape::kLShape};
    const auto spec = random_scene(seed, opts, labels, kitti, TemplateConfig::defaults());
    const auto s = synthesize_scene(spec, labels, kitti, DirectionBinning{});
    const auto& ann = s.annotation;
    std::map<InstanceId, int> depth_of;
    for (int r = 0; r < ann.height(); ++r) {
      for (int c = 0; c < ann.width(); ++c) {
        const InstanceId id = ann.instance_ids(r, c);
        if (id == 0) continue;
        CHECK((s.triple.scores(r, c) > 0.0f).count() == 1);
        auto [it, fresh] = depth_of.emplace(id, s.triple.depth(r, c));
        if (!fresh) CHECK(it->second == s.triple.depth(r, c));
      }
    }
    // re-encoding is bit-identical
    const auto again = encode_scene(ann, labels, kitti, DirectionBinning{});
    CHECK((again.direction == s.triple.direction).all());
    CHECK((again.depth == s.triple.depth).all());
    CHECK((again.semantic == s.triple.semantic).all());
  }
}
