#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "doclayout/core_model.hpp"

namespace doclayout {

struct PostprocessConfig {
  double score_threshold = 0.25;
  double nms_iou_threshold = 0.45;
  bool class_agnostic = false;
  std::size_t max_detections_per_page = 300;

  // Throws std::invalid_argument when a threshold is outside [0,1] or the
  // detection cap is zero.
  void validate() const;
};

// Keeps detections with score >= threshold, in input order.
std::vector<Detection> filter_by_score(std::span<const Detection> dets, double threshold);

// Greedy non-maximum suppression.
//
// Candidates are ranked by score (descending), then by smaller area, then by
// (y1, x1, y2, x2), class id and finally input index, which makes the ranking
// total. The top candidate is kept and every remaining candidate whose IoU
// with it is strictly greater than `iou_threshold` is dropped; only pairs of
// the same class compete unless `class_agnostic` is set. Output follows the
// ranking and holds at most `max_detections` entries.
std::vector<Detection> nms(std::span<const Detection> dets, double iou_threshold,
                           bool class_agnostic = false,
                           std::size_t max_detections = static_cast<std::size_t>(-1));

// filter_by_score followed by nms with the configured cap.
std::vector<Detection> postprocess(std::span<const Detection> dets, const PostprocessConfig& cfg);

}  // namespace doclayout
