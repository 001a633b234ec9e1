#include "doclayout/postprocess.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <tuple>

#include "doclayout/geometry.hpp"

namespace doclayout {

void PostprocessConfig::validate() const {
  if (!(score_threshold >= 0 && score_threshold <= 1)) {
    throw std::invalid_argument("score_threshold must be in [0,1]");
  }
  if (!(nms_iou_threshold >= 0 && nms_iou_threshold <= 1)) {
    throw std::invalid_argument("nms_iou_threshold must be in [0,1]");
  }
  if (max_detections_per_page == 0) {
    throw std::invalid_argument("max_detections_per_page must be positive");
  }
}

std::vector<Detection> filter_by_score(std::span<const Detection> dets, double threshold) {
  std::vector<Detection> out;
  std::copy_if(dets.begin(), dets.end(), std::back_inserter(out),
               [threshold](const Detection& d) { return d.score >= threshold; });
  return out;
}

std::vector<Detection> nms(std::span<const Detection> dets, double iou_threshold,
                           bool class_agnostic, std::size_t max_detections) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  auto key = [&](std::size_t i) {
    const auto& d = dets[i];
    return std::make_tuple(-d.score, area(d.bbox), d.bbox.y1(), d.bbox.x1(), d.bbox.y2(),
                           d.bbox.x2(), class_id(d.label), i);
  };
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return key(a) < key(b); });

  std::vector<bool> suppressed(dets.size(), false);
  std::vector<Detection> kept;
  for (std::size_t oi = 0; oi < order.size() && kept.size() < max_detections; ++oi) {
    const std::size_t i = order[oi];
    if (suppressed[i]) continue;
    kept.push_back(dets[i]);
    for (std::size_t oj = oi + 1; oj < order.size(); ++oj) {
      const std::size_t j = order[oj];
      if (suppressed[j]) continue;
      if (!class_agnostic && dets[j].label != dets[i].label) continue;
      if (iou(dets[i].bbox, dets[j].bbox) > iou_threshold) suppressed[j] = true;
    }
  }
  return kept;
}

std::vector<Detection> postprocess(std::span<const Detection> dets, const PostprocessConfig& cfg) {
  cfg.validate();
  const auto filtered = filter_by_score(dets, cfg.score_threshold);
  return nms(filtered, cfg.nms_iou_threshold, cfg.class_agnostic, cfg.max_detections_per_page);
}

}  // namespace doclayout
