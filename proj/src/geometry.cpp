#include "doclayout/geometry.hpp"

#include <algorithm>

namespace doclayout {

double area(const BBox& b) { return b.width() * b.height(); }

double intersection_area(const BBox& a, const BBox& b) {
  const double iw = std::min(a.x2(), b.x2()) - std::max(a.x1(), b.x1());
  const double ih = std::min(a.y2(), b.y2()) - std::max(a.y1(), b.y1());
  if (iw <= 0 || ih <= 0) return 0.0;
  return iw * ih;
}

double iou(const BBox& a, const BBox& b) {
  const double inter = intersection_area(a, b);
  const double uni = area(a) + area(b) - inter;
  if (uni <= 0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double coverage(const BBox& child, const BBox& parent) {
  const double a = area(child);
  if (a <= 0) return 0.0;
  return std::clamp(intersection_area(child, parent) / a, 0.0, 1.0);
}

BBox clamp_to_image(const BBox& b, double w, double h) {
  return BBox(std::clamp(b.x1(), 0.0, w), std::clamp(b.y1(), 0.0, h),
              std::clamp(b.x2(), 0.0, w), std::clamp(b.y2(), 0.0, h));
}

BBox from_normalized_center(const NormalizedBox& n, double image_w, double image_h) {
  const BBox raw((n.cx - n.w / 2) * image_w, (n.cy - n.h / 2) * image_h,
                 (n.cx + n.w / 2) * image_w, (n.cy + n.h / 2) * image_h);
  return clamp_to_image(raw, image_w, image_h);
}

NormalizedBox to_normalized_center(const BBox& b, double image_w, double image_h) {
  return {(b.x1() + b.x2()) / 2 / image_w, (b.y1() + b.y2()) / 2 / image_h,
          b.width() / image_w, b.height() / image_h};
}

}  // namespace doclayout
