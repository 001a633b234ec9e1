#pragma once

// Reference computations used only by tests. They deliberately take the
// slow, obvious route (pixel counting, subset enumeration, explicit step
// curves) and share no code with the library beyond its data types.

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "doclayout/core_model.hpp"

namespace oracle {

// Integer box [x1,x2) x [y1,y2) on the pixel grid.
struct IntBox {
  int x1, y1, x2, y2;
};

// IoU by counting unit cells in intersection and union.
double raster_iou(const IntBox& a, const IntBox& b);

// Greedy NMS characterised without the greedy loop: the unique subset S of
// `dets` such that, following `rank`, an element belongs to S iff no element
// of S ranked before it (same class unless agnostic) has IoU > threshold.
// Found by enumerating all subsets; n must stay small.
std::vector<std::size_t> nms_fixpoint(const std::vector<doclayout::Detection>& dets,
                                      const std::vector<std::size_t>& rank, double threshold,
                                      bool class_agnostic);

// AP ingredients for one class: TP/FP flags in cumulation order.
// Exact area under the monotone precision envelope of the step PR curve.
double envelope_area(const std::vector<bool>& tp_flags, std::size_t total_gt);
// Same envelope sampled at recall k/100, k = 0..100.
double envelope_101(const std::vector<bool>& tp_flags, std::size_t total_gt);

// Detection hit/miss flags for one class at one IoU threshold, in the
// cumulation order (score desc, page id, detection index). Each detection
// takes the free same-class ground truth on its page with the highest IoU.
std::vector<bool> greedy_flags(const std::vector<doclayout::PageRecord>& pages,
                               doclayout::ClassLabel label, double threshold,
                               std::size_t* total_gt = nullptr);

// Largest number of (detection, ground truth) pairs with equal class and
// IoU >= threshold, each used once; exhaustive search.
std::size_t max_matching(const std::vector<doclayout::Detection>& dets,
                         const std::vector<doclayout::Annotation>& gts, double threshold);

// Random page content for property tests.
struct PageGen {
  int width = 640, height = 640;
  int max_classes = 3;
  double score_step = 0.0;  // quantize scores (0 = continuous)
};
doclayout::BBox random_box(std::mt19937& rng, int w, int h, int min_side = 2);
doclayout::BBox jitter(std::mt19937& rng, const doclayout::BBox& b, double amount, int w, int h);
doclayout::PageRecord random_page(std::mt19937& rng, const std::string& id, std::size_t n_gt,
                                  std::size_t n_det, const PageGen& gen);

}  // namespace oracle
