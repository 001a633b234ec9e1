#include <doctest.h>

#include <algorithm>
#include <random>
#include <string>

#include "../fixture_io.hpp"
#include "../oracles.hpp"
#include "doclayout/assembly.hpp"
#include "doclayout/errors.hpp"
#include "doclayout/geometry.hpp"
#include "doclayout/io.hpp"

using namespace doclayout;

namespace {

std::string fixture_text(const std::string& name) {
  return read_file(std::string(DOCLAYOUT_FIXTURES) + "/" + name);
}

LayoutComponent comp(double x1, double y1, double x2, double y2, ClassLabel c = ClassLabel::kText) {
  LayoutComponent out;
  out.bbox = BBox(x1, y1, x2, y2);
  out.label = c;
  return out;
}

std::vector<double> y1s(const std::vector<LayoutComponent>& comps) {
  std::vector<double> out;
  for (const auto& c : comps) out.push_back(c.bbox.y1());
  return out;
}

void flatten(const std::vector<LayoutComponent>& comps, std::vector<Detection>& out) {
  for (const auto& c : comps) {
    out.emplace_back(c.bbox, c.label, c.score);
    flatten(c.children, out);
  }
}

}  // namespace

TEST_CASE("group box takes the image and caption it contains") {
  using C = ClassLabel;
  const std::vector<Detection> dets = {Detection(BBox(0, 0, 100, 100), C::kImageCaption, 0.9),
                                       Detection(BBox(10, 80, 90, 95), C::kCaption, 0.8),
                                       Detection(BBox(10, 10, 90, 75), C::kImage, 0.85)};
  const auto g = group_components(dets);
  REQUIRE(g.size() == 1);
  CHECK(g[0].label == C::kImageCaption);
  REQUIRE(g[0].children.size() == 2);
  CHECK(g[0].children[0].label == C::kImage);
  CHECK(g[0].children[1].label == C::kCaption);
}

TEST_CASE("no group boxes leaves a flat list") {
  const std::vector<Detection> dets = {Detection(BBox(0, 0, 10, 10), ClassLabel::kText, 0.9),
                                       Detection(BBox(0, 20, 10, 30), ClassLabel::kCaption, 0.5)};
  const auto g = group_components(dets);
  REQUIRE(g.size() == 2);
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(g[i].bbox == dets[i].bbox);
    CHECK(g[i].children.empty());
  }
}

TEST_CASE("caption shared by two group boxes goes to the better cover") {
  using C = ClassLabel;
  // caption (0,0,100,10); parent A covers 80%, parent B covers 30%
  const Detection caption(BBox(0, 0, 100, 10), C::kCaption, 0.9);
  const Detection a(BBox(20, 0, 200, 50), C::kImageCaption, 0.7);
  const Detection b(BBox(0, 0, 30, 50), C::kImageCaption, 0.8);
  CHECK(coverage(caption.bbox, a.bbox) == doctest::Approx(0.8));
  CHECK(coverage(caption.bbox, b.bbox) == doctest::Approx(0.3));
  const auto g = group_components(std::vector{b, caption, a});
  REQUIRE(g.size() == 2);
  std::size_t with_child = 0;
  for (const auto& p : g) {
    if (p.children.empty()) continue;
    ++with_child;
    CHECK(p.bbox == a.bbox);
    CHECK(p.children.front().bbox == caption.bbox);
  }
  CHECK(with_child == 1);
}

TEST_CASE("table group does not adopt images and orphans stay top level") {
  using C = ClassLabel;
  const std::vector<Detection> dets = {Detection(BBox(0, 0, 100, 100), C::kTableCaption, 0.9),
                                       Detection(BBox(10, 10, 90, 50), C::kImage, 0.8),
                                       Detection(BBox(10, 60, 90, 70), C::kCaption, 0.8),
                                       Detection(BBox(10, 75, 90, 85), C::kCaption, 0.7),
                                       Detection(BBox(300, 300, 400, 320), C::kCaption, 0.6)};
  const auto g = group_components(dets);
  CHECK(count_components(g) == dets.size());
  const auto parent = std::find_if(g.begin(), g.end(), [](auto& c) { return c.label == C::kTableCaption; });
  REQUIRE(parent != g.end());
  REQUIRE(parent->children.size() == 1);
  CHECK(parent->children[0].label == C::kCaption);
  CHECK(parent->children[0].score == 0.8);
}

TEST_CASE("grouping never loses or duplicates a detection") {
  std::mt19937 rng(91);
  for (int trial = 0; trial < 200; ++trial) {
    oracle::PageGen gen;
    gen.max_classes = 7;
    const auto page = oracle::random_page(rng, "p", 6, 15, gen);
    const auto g = group_components(page.detections);
    std::vector<Detection> flat;
    flatten(g, flat);
    auto a = flat, b = page.detections;
    auto key = [](const Detection& d) {
      return std::tuple(d.bbox.x1(), d.bbox.y1(), d.bbox.x2(), d.bbox.y2(), class_id(d.label), d.score);
    };
    auto less = [&](const Detection& x, const Detection& y) { return key(x) < key(y); };
    std::sort(a.begin(), a.end(), less);
    std::sort(b.begin(), b.end(), less);
    CHECK(a == b);
    for (const auto& p : g) {
      if (!p.children.empty()) CHECK(is_group(p.label));
      int elements = 0, captions = 0;
      for (const auto& c : p.children) {
        CHECK(coverage(c.bbox, p.bbox) >= 0.5);
        elements += c.label != ClassLabel::kCaption;
        captions += c.label == ClassLabel::kCaption;
      }
      CHECK(elements <= 1);
      CHECK(captions <= 1);
    }
  }
}

TEST_CASE("reading order simple cases") {
  CHECK(reading_order({}, 1000).empty());
  const auto single = reading_order({comp(0, 400, 1000, 450), comp(0, 10, 1000, 50), comp(0, 200, 1000, 250)}, 1000);
  CHECK(y1s(single) == std::vector<double>{10, 200, 400});
  const auto two = reading_order({comp(550, 300, 950, 400), comp(50, 300, 450, 400),
                                  comp(550, 10, 950, 200), comp(50, 10, 450, 200)},
                                 1000);
  REQUIRE(two.size() == 4);
  CHECK(two[0].bbox == BBox(50, 10, 450, 200));
  CHECK(two[1].bbox == BBox(50, 300, 450, 400));
  CHECK(two[2].bbox == BBox(550, 10, 950, 200));
  CHECK(two[3].bbox == BBox(550, 300, 950, 400));
}

TEST_CASE("reading order fixtures match their golden order") {
  for (const std::string name : {"reading_order_two_column", "reading_order_single_column"}) {
    CAPTURE(name);
    const auto page = fixture_io::parse_order_page(fixture_text(name + ".txt"));
    const auto ordered = reading_order(page.components, page.width);
    CHECK(fixture_io::format_order(ordered) == fixture_text(name + ".golden"));
  }
}

TEST_CASE("reading order is a deterministic permutation") {
  std::mt19937 rng(101);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<LayoutComponent> comps;
    std::uniform_int_distribution<int> n(0, 25);
    for (int i = n(rng); i > 0; --i) {
      LayoutComponent c;
      c.bbox = oracle::random_box(rng, 800, 1000, 5);
      comps.push_back(c);
    }
    const auto ordered = reading_order(comps, 800);
    REQUIRE(ordered.size() == comps.size());
    auto shuffled = comps;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(reading_order(shuffled, 800) == ordered);
    for (const auto& c : comps) {
      CHECK(std::count(ordered.begin(), ordered.end(), c) == std::count(comps.begin(), comps.end(), c));
    }
  }
}

TEST_CASE("full-width pages sort by y1") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> y(0, 900);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<LayoutComponent> comps;
    for (int i = 0; i < 12; ++i) {
      const double top = y(rng);
      comps.push_back(comp(0, top, 640, top + 40));
    }
    auto ys = y1s(reading_order(comps, 640));
    CHECK(std::is_sorted(ys.begin(), ys.end()));
  }
}

TEST_CASE("layout json emits the documented shape") {
  PageLayout layout{"pg", 640, 480, {}};
  auto c = comp(10, 20, 300, 60);
  c.score = 0.875;
  c.data = std::string("Hello");
  layout.components.push_back(c);
  const std::string out = emit_layout_json(layout);
  CHECK(out.find("\"page_id\": \"pg\"") != std::string::npos);
  CHECK(out.find("\"class\": \"text\"") != std::string::npos);
  CHECK(out.find("\"data\": \"Hello\"") != std::string::npos);
  CHECK(out.find("children") == std::string::npos);
  CHECK(emit_layout_json(parse_layout_json(out)) == out);
  CHECK(parse_layout_json(out) == layout);
}

TEST_CASE("table group golden") {
  using C = ClassLabel;
  const std::vector<Detection> dets = {Detection(BBox(50, 150, 450, 350), C::kTable, 0.95),
                                       Detection(BBox(20.5, 420.25, 480, 490), C::kText, 0.7),
                                       Detection(BBox(0, 100, 500, 400), C::kTableCaption, 0.9),
                                       Detection(BBox(50, 110, 450, 140), C::kCaption, 0.8)};
  const auto layout = assemble_page("p1", 500, 500, dets);
  const std::string golden = fixture_text("layout_table_group.json");
  CHECK(emit_layout_json(layout) == golden);
  CHECK(emit_layout_json(parse_layout_json(golden)) == golden);
}

TEST_CASE("layout json with table data and errors survives a round trip") {
  PageLayout layout{"pg", 100, 100, {}};
  auto t = comp(0, 0, 50, 50, ClassLabel::kTable);
  t.data = TableCells{{{"a", "b"}, {"c", ""}}};
  auto e = comp(0, 60, 50, 80);
  e.error = "crash: exit code 1";
  layout.components = {t, e};
  const std::string out = emit_layout_json(layout);
  CHECK(parse_layout_json(out) == layout);
  CHECK_THROWS_AS(parse_layout_json("[1,2]"), SchemaError);
}

TEST_CASE("rectangularize pads short rows") {
  const auto t = rectangularize({{"a", "b", "c"}, {"d"}, {}});
  CHECK(t.num_rows() == 3);
  CHECK(t.num_cols() == 3);
  CHECK(t.rows[1] == std::vector<std::string>{"d", "", ""});
  CHECK(t.rows[2] == std::vector<std::string>{"", "", ""});
  CHECK(rectangularize({}).num_cols() == 0);
}

TEST_CASE("assembled boxes stay within the page") {
  std::mt19937 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    oracle::PageGen gen;
    gen.max_classes = 7;
    const auto page = oracle::random_page(rng, "p", 0, 20, gen);
    const auto layout = assemble_page("p", gen.width, gen.height, page.detections);
    std::vector<Detection> flat;
    flatten(layout.components, flat);
    CHECK(flat.size() == page.detections.size());
    for (const auto& d : flat) {
      CHECK(d.bbox.x1() >= 0);
      CHECK(d.bbox.y2() <= gen.height);
    }
  }
}
