#include <doctest.h>

#include <algorithm>
#include <random>

#include "../oracles.hpp"
#include "doclayout/geometry.hpp"

using namespace doclayout;

TEST_CASE("area") {
  CHECK(area(BBox(0, 0, 2, 2)) == 4.0);
  CHECK(area(BBox(5, 5, 5, 9)) == 0.0);
  CHECK(area(BBox(0, 0, 640, 640)) == 409600.0);
}

TEST_CASE("iou fixed cases") {
  CHECK(iou(BBox(0, 0, 10, 10), BBox(0, 0, 10, 10)) == 1.0);
  CHECK(iou(BBox(0, 0, 1, 1), BBox(5, 5, 6, 6)) == 0.0);
  // touching edges share no area
  CHECK(iou(BBox(0, 0, 1, 1), BBox(1, 0, 2, 1)) == 0.0);
  CHECK(iou(BBox(3, 3, 3, 3), BBox(3, 3, 3, 3)) == 0.0);
  CHECK(iou(BBox(3, 3, 3, 8), BBox(0, 0, 10, 10)) == 0.0);
}

TEST_CASE("iou of overlapping squares matches pixel count") {
  const double expected = oracle::raster_iou({0, 0, 2, 2}, {1, 1, 3, 3});
  CHECK(expected == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
  CHECK(iou(BBox(0, 0, 2, 2), BBox(1, 1, 3, 3)) == doctest::Approx(0.142857).epsilon(1e-5));
  CHECK(iou(BBox(0, 0, 2, 2), BBox(1, 1, 3, 3)) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("iou properties on random integer boxes") {
  std::mt19937 rng(11);
  for (int i = 0; i < 300; ++i) {
    const BBox a = oracle::random_box(rng, 200, 200, 1);
    const BBox b = oracle::random_box(rng, 200, 200, 1);
    const double v = iou(a, b);
    CHECK(v == iou(b, a));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK((v == 0.0) == (intersection_area(a, b) == 0.0));
    CHECK(iou(a, a) == 1.0);
    const oracle::IntBox ia{int(a.x1()), int(a.y1()), int(a.x2()), int(a.y2())};
    const oracle::IntBox ib{int(b.x1()), int(b.y1()), int(b.x2()), int(b.y2())};
    CHECK(std::abs(v - oracle::raster_iou(ia, ib)) <= 2.0 / std::min(area(a), area(b)));
  }
}

TEST_CASE("coverage is intersection over child area") {
  CHECK(coverage(BBox(0, 0, 10, 10), BBox(0, 0, 100, 100)) == 1.0);
  CHECK(coverage(BBox(0, 0, 10, 10), BBox(5, 0, 100, 100)) == 0.5);
  CHECK(coverage(BBox(0, 0, 0, 10), BBox(0, 0, 100, 100)) == 0.0);
}

TEST_CASE("clamp_to_image") {
  CHECK(clamp_to_image(BBox(-5, -5, 10, 10), 20, 20) == BBox(0, 0, 10, 10));
  CHECK(clamp_to_image(BBox(0, 0, 10, 10), 20, 20) == BBox(0, 0, 10, 10));
  CHECK(clamp_to_image(BBox(15, 15, 30, 30), 20, 20) == BBox(15, 15, 20, 20));
}

TEST_CASE("normalized center conversions") {
  CHECK(from_normalized_center({0.5, 0.5, 1.0, 1.0}, 100, 100) == BBox(0, 0, 100, 100));
  CHECK(from_normalized_center({0.5, 0.5, 0.5, 0.5}, 200, 200) == BBox(50, 50, 150, 150));
  // corners land at (-64,-48,192,144) before clamping
  const BBox clipped = from_normalized_center({0.1, 0.1, 0.4, 0.4}, 640, 480);
  CHECK(clipped.x1() == 0.0);
  CHECK(clipped.y1() == 0.0);
  CHECK(clipped.x2() == doctest::Approx(192.0).epsilon(1e-12));
  CHECK(clipped.y2() == doctest::Approx(144.0).epsilon(1e-12));
  const auto back = to_normalized_center(clipped, 640, 480);
  CHECK(back.cx == doctest::Approx(0.15));
  CHECK(back.cy == doctest::Approx(0.15));
  CHECK(back.w == doctest::Approx(0.3));
  CHECK(back.h == doctest::Approx(0.3));

  const auto n = to_normalized_center(BBox(0, 0, 100, 100), 100, 100);
  CHECK(n.cx == 0.5);
  CHECK(n.w == 1.0);
  const auto m = to_normalized_center(BBox(50, 50, 150, 150), 200, 200);
  CHECK(m.cx == 0.5);
  CHECK(m.h == 0.5);
}

TEST_CASE("normalized conversion round trip inside the image") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const double w = 100 + 900 * u(rng), h = 100 + 900 * u(rng);
    const double x1 = u(rng) * (w - 2) + 0.5, y1 = u(rng) * (h - 2) + 0.5;
    const BBox b(x1, y1, x1 + u(rng) * (w - x1 - 0.5), y1 + u(rng) * (h - y1 - 0.5));
    const BBox r = from_normalized_center(to_normalized_center(b, w, h), w, h);
    CHECK(std::abs(r.x1() - b.x1()) < 1e-6);
    CHECK(std::abs(r.y1() - b.y1()) < 1e-6);
    CHECK(std::abs(r.x2() - b.x2()) < 1e-6);
    CHECK(std::abs(r.y2() - b.y2()) < 1e-6);
  }
}
