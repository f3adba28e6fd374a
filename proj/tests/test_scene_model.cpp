#include <doctest.h>

#include <cmath>
#include <set>

#include "ispc/errors.hpp"
#include "ispc/scene_model.hpp"

using namespace ispc;

TEST_CASE("depth classes follow the shipped tables") {
  const auto kitti = DepthLayering::kitti();
  const auto city = DepthLayering::cityscapes();
  CHECK(kitti.num_classes() == 19);
  CHECK(city.num_classes() == 19);
  CHECK(depth_class_of(11.0, kitti) == 8);
  CHECK(kitti.lower(8) == 10.0);
  CHECK(kitti.upper(8) == 12.0);
  CHECK(depth_class_of(3.0, city) == 1);
  CHECK(depth_class_of(500.0, kitti) == 19);
  CHECK(std::isinf(kitti.upper(19)));

  // lower bounds are inclusive
  CHECK(depth_class_of(10.0, kitti) == 8);
  CHECK(depth_class_of(9.999, kitti) == 7);
  CHECK(depth_class_of(76.0, kitti) == 19);
  CHECK(depth_class_of(100.0, city) == 19);
}

TEST_CASE("depth midpoints") {
  const auto kitti = DepthLayering::kitti();
  const auto city = DepthLayering::cityscapes();
  CHECK(depth_midpoint(8, kitti) == 11.0);
  CHECK(depth_midpoint(1, city) == 3.0);
  // open class: 76 + (76 - 63) / 2
  CHECK(depth_midpoint(19, kitti) == 82.5);
  CHECK(depth_midpoint(19, city) == 107.0);
  CHECK(depth_midpoint(14, kitti) == 32.0);
}

TEST_CASE("depth quantization errors") {
  const auto kitti = DepthLayering::kitti();
  CHECK_THROWS_AS(depth_class_of(0.0, kitti), InvalidInput);
  CHECK_THROWS_AS(depth_class_of(-3.0, kitti), InvalidInput);
  CHECK_THROWS_AS(depth_class_of(std::nan(""), kitti), InvalidInput);
  CHECK_THROWS_AS(depth_class_of(INFINITY, kitti), InvalidInput);
  CHECK_THROWS_AS(depth_midpoint(0, kitti), InvalidInput);
  CHECK_THROWS_AS(depth_midpoint(20, kitti), InvalidInput);
  CHECK_THROWS_AS(DepthLayering({0.0}), InvalidInput);
  CHECK_THROWS_AS(DepthLayering({0.0, 5.0, 5.0}), InvalidInput);
  CHECK_THROWS_AS(DepthLayering({4.0, 2.0}), InvalidInput);
}

TEST_CASE("quantize then midpoint stays within half a class, monotone") {
  for (const auto& layering : {DepthLayering::kitti(), DepthLayering::cityscapes()}) {
    DepthClass prev = 1;
    for (double d = 0.01; d < 200.0; d += 0.037) {
      const DepthClass k = depth_class_of(d, layering);
      CHECK(k >= prev);
      prev = k;
      if (layering.is_bounded(k)) {
        const double half = (layering.upper(k) - layering.lower(k)) / 2.0;
        CHECK(std::abs(depth_midpoint(k, layering) - d) <= half);
      }
    }
  }
}

TEST_CASE("custom coarse layering") {
  const DepthLayering coarse({0.0, 10.0, 30.0});
  CHECK(coarse.num_classes() == 3);
  CHECK(coarse.class_of(5.0) == 1);
  CHECK(coarse.class_of(45.0) == 3);
  CHECK(coarse.midpoint(3) == 40.0);
}

TEST_CASE("category lookup") {
  const auto labels = LabelSet::cityscapes();
  const auto human = labels.category_index("human");
  CHECK(category_of(labels.label_id("rider"), labels) == human);
  CHECK(category_of(labels.label_id("person"), labels) == human);
  CHECK_FALSE(category_of(labels.label_id("road"), labels).has_value());
  CHECK(category_of(labels.label_id("bus"), labels) == labels.category_index("large-vehicle"));
  CHECK(category_of(labels.label_id("bicycle"), labels) == labels.category_index("two-wheeler"));
  CHECK_THROWS_AS(category_of(200, labels), InvalidInput);
  CHECK_THROWS_AS(labels.label_id("zeppelin"), InvalidInput);
}

TEST_CASE("categories partition the object labels") {
  const auto labels = LabelSet::cityscapes();
  std::set<LabelId> objects, covered;
  for (const auto& l : labels.labels()) {
    if (l.is_object) objects.insert(l.id);
  }
  CHECK(objects.size() == 8);
  CHECK(labels.categories().size() == 4);
  std::size_t total = 0;
  for (const auto& c : labels.categories()) {
    total += c.members.size();
    covered.insert(c.members.begin(), c.members.end());
  }
  CHECK(total == covered.size());  // disjoint
  CHECK(covered == objects);       // total
}

TEST_CASE("label set validation") {
  CHECK_THROWS_AS(LabelSet({{0, "bg", false}, {2, "car", true}}, {{"car", {2}}}, 0), InvalidInput);
  CHECK_THROWS_AS(LabelSet({{0, "bg", false}, {1, "car", true}}, {}, 0), InvalidInput);
  CHECK_THROWS_AS(LabelSet({{0, "bg", false}, {1, "car", true}}, {{"a", {1}}, {"b", {1}}}, 0), InvalidInput);
  CHECK_THROWS_AS(LabelSet({{0, "bg", true}}, {{"a", {0}}}, 0), InvalidInput);
  CHECK_NOTHROW(LabelSet::kitti());
}

TEST_CASE("direction bins tile the circle") {
  const DirectionBinning bins;
  CHECK(bins.size() == 8);
  CHECK(bins.width_deg() == 45.0);
  for (int k = 0; k < 8; ++k) {
    CHECK(bins.bin_of(k * 45.0) == k);
    CHECK(bins.center(k).norm() == doctest::Approx(1.0));
  }
  // exactly one bin contains each angle: bin_of agrees with the nearest center
  for (double a = 0.0; a < 360.0; a += 0.25) {
    const int k = bins.bin_of(a);
    REQUIRE(k >= 0);
    REQUIRE(k < 8);
    double d = std::fmod(std::abs(a - bins.center_deg(k)), 360.0);
    d = std::min(d, 360.0 - d);
    CHECK(d <= 22.5);
  }
  CHECK(bins.bin_of(-45.0) == 7);
  CHECK(bins.bin_of(720.0) == 0);
  CHECK(bins.center(2).x() == doctest::Approx(0.0));
  CHECK(bins.center(2).y() == 1.0);
}

TEST_CASE("triple validation") {
  auto t = make_triple(4, 3, 8, 0);
  CHECK_NOTHROW(check_triple(t));
  t.scores(1, 1)(0) = 0.5f;
  CHECK_THROWS_AS(check_triple(t), InvalidInput);
  t.scores(1, 1)(3) = 0.5f;
  CHECK_NOTHROW(check_triple(t));
  t.scores(0, 0)(0) = -1.0f;
  CHECK_THROWS_AS(check_triple(t), InvalidInput);
}
