#pragma once

#include "doclayout/core_model.hpp"

namespace doclayout {

// Boxes are continuous real rectangles: no +1 pixel convention.

double area(const BBox& b);
double intersection_area(const BBox& a, const BBox& b);

// Intersection over union; 0 when the union is empty.
double iou(const BBox& a, const BBox& b);

// Fraction of `child` covered by `parent` (intersection / child area); 0 for a
// zero-area child.
double coverage(const BBox& child, const BBox& parent);

// Clips every coordinate into [0,w]x[0,h]. May return a zero-area box.
BBox clamp_to_image(const BBox& b, double w, double h);

// Center/size form with every component a fraction of the image size.
struct NormalizedBox {
  double cx = 0, cy = 0, w = 0, h = 0;
};

// Converts center-normalized coordinates to an absolute, clamped box.
BBox from_normalized_center(const NormalizedBox& n, double image_w, double image_h);

NormalizedBox to_normalized_center(const BBox& b, double image_w, double image_h);

}  // namespace doclayout
