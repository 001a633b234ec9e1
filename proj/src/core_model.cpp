#include "doclayout/core_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include "doclayout/errors.hpp"

namespace doclayout {

namespace {

constexpr std::array<std::string_view, kNumClasses> kNames = {
    "title", "text", "image", "caption", "image_caption", "table", "table_caption",
};

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

}  // namespace

std::string_view name_of(ClassLabel c) { return kNames.at(static_cast<std::size_t>(c)); }

ClassLabel class_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (iequals(kNames[i], name)) return static_cast<ClassLabel>(i);
  }
  throw UnknownClass(std::string(name));
}

ClassLabel class_from_id(long id) {
  if (id < 0 || id >= kNumClasses) throw UnknownClass(std::to_string(id));
  return static_cast<ClassLabel>(id);
}

BBox::BBox(double x1, double y1, double x2, double y2) {
  if (!std::isfinite(x1) || !std::isfinite(y1) || !std::isfinite(x2) || !std::isfinite(y2)) {
    throw std::invalid_argument("bbox coordinates must be finite");
  }
  x1_ = std::min(x1, x2);
  x2_ = std::max(x1, x2);
  y1_ = std::min(y1, y2);
  y2_ = std::max(y1, y2);
}

Detection::Detection(BBox b, ClassLabel l, double s) : bbox(b), label(l), score(s) {
  if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("detection score outside [0,1]");
}

void validate_page(const PageRecord& page) {
  if (page.page_id.empty()) throw std::invalid_argument("page_id must be non-empty");
  if (page.image_width <= 0 || page.image_height <= 0) {
    throw std::invalid_argument("page '" + page.page_id + "': image size must be positive");
  }
  auto check = [&](const BBox& b) {
    if (b.x1() < 0 || b.y1() < 0 || b.x2() > page.image_width || b.y2() > page.image_height) {
      throw std::invalid_argument("page '" + page.page_id + "': bbox outside image bounds");
    }
  };
  for (const auto& a : page.annotations) check(a.bbox);
  for (const auto& d : page.detections) check(d.bbox);
}

}  // namespace doclayout
