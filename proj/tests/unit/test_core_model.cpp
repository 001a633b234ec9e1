#include <doctest.h>

#include <cmath>
#include <limits>

#include "doclayout/core_model.hpp"
#include "doclayout/errors.hpp"

using namespace doclayout;

TEST_CASE("class names resolve case-insensitively") {
  CHECK(class_from_name("Table") == ClassLabel::kTable);
  CHECK(class_id(class_from_name("Table")) == 5);
  CHECK(class_from_name("title") == ClassLabel::kTitle);
  CHECK(class_id(ClassLabel::kTitle) == 0);
  CHECK(class_from_name("IMAGE_CAPTION") == ClassLabel::kImageCaption);
  CHECK_THROWS_AS(class_from_name("paragraph"), UnknownClass);
  CHECK_THROWS_AS(class_from_name(""), UnknownClass);
}

TEST_CASE("class name round trip for every label") {
  for (auto c : kAllClasses) {
    CHECK(class_from_name(name_of(c)) == c);
    CHECK(class_from_id(class_id(c)) == c);
  }
  CHECK_THROWS_AS(class_from_id(7), UnknownClass);
  CHECK_THROWS_AS(class_from_id(-1), UnknownClass);
}

TEST_CASE("only the two caption groups are group classes") {
  int groups = 0;
  for (auto c : kAllClasses) groups += is_group(c);
  CHECK(groups == 2);
  CHECK(is_group(ClassLabel::kImageCaption));
  CHECK(is_group(ClassLabel::kTableCaption));
}

TEST_CASE("bbox normalizes swapped corners") {
  const BBox ordered(1, 2, 30, 40);
  CHECK(BBox(30, 40, 1, 2) == ordered);
  CHECK(BBox(30, 2, 1, 40) == ordered);
  CHECK(BBox(ordered.x1(), ordered.y1(), ordered.x2(), ordered.y2()) == ordered);
  CHECK(ordered.width() == 29);
  CHECK(ordered.height() == 38);
}

TEST_CASE("bbox rejects non-finite coordinates") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS(BBox(nan, 0, 1, 1));
  CHECK_THROWS(BBox(0, 0, inf, 1));
}

TEST_CASE("detection score must lie in [0,1]") {
  CHECK_NOTHROW(Detection(BBox(0, 0, 1, 1), ClassLabel::kText, 0.0));
  CHECK_NOTHROW(Detection(BBox(0, 0, 1, 1), ClassLabel::kText, 1.0));
  CHECK_THROWS(Detection(BBox(0, 0, 1, 1), ClassLabel::kText, 1.0001));
  CHECK_THROWS(Detection(BBox(0, 0, 1, 1), ClassLabel::kText, -0.1));
  CHECK_THROWS(Detection(BBox(0, 0, 1, 1), ClassLabel::kText, std::nan("")));
}

TEST_CASE("validate_page checks bounds and dimensions") {
  PageRecord page{"p", 100, 50, {{BBox(0, 0, 100, 50), ClassLabel::kTitle}}, {}};
  CHECK_NOTHROW(validate_page(page));
  page.annotations.push_back({BBox(0, 0, 101, 10), ClassLabel::kText});
  CHECK_THROWS(validate_page(page));
  PageRecord zero{"z", 0, 10, {}, {}};
  CHECK_THROWS(validate_page(zero));
}
