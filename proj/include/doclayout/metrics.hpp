#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "doclayout/core_model.hpp"

namespace doclayout {

// IoU thresholds 0.50, 0.55, ..., 0.95.
inline constexpr std::size_t kNumCocoThresholds = 10;
std::array<double, kNumCocoThresholds> coco_iou_thresholds();

struct MatchedDetection {
  std::string page_id;
  std::size_t det_index = 0;  // position within the page's detection list
  ClassLabel label = ClassLabel::kText;
  double score = 0.0;
  bool matched = false;
  double matched_iou = 0.0;  // 0 when unmatched
};

struct MatchResult {
  double iou_threshold = 0.5;
  // Sorted by (score desc, page_id, det_index).
  std::vector<MatchedDetection> detections;
  std::array<std::size_t, kNumClasses> gt_count{};
  // Ground truths left unmatched, per page and class.
  std::map<std::string, std::array<std::size_t, kNumClasses>> unmatched_gt;
};

// Greedy per-page, per-class matching: detections in score-descending order
// (ties by input index) each take the unmatched same-class ground truth with
// the highest IoU (ties by lower index) when that IoU >= iou_threshold.
MatchResult match_detections(std::span<const PageRecord> pages, double iou_threshold);

// Copies the detections of `detection_pages` onto the ground-truth page with
// the same id. Throws PageMismatch when a detection page has no ground-truth
// counterpart.
std::vector<PageRecord> join_detections(std::span<const PageRecord> ground_truth,
                                        std::span<const PageRecord> detection_pages);

// TP/(TP+FP) and TP/(TP+FN). `if_empty` is returned for a zero denominator.
double precision(std::size_t tp, std::size_t fp, double if_empty = 1.0);
double recall(std::size_t tp, std::size_t fn, double if_empty = 1.0);
// Harmonic mean; 0 when p + r == 0.
double f1(double p, double r);

struct ScoredMatch {
  double score = 0.0;
  bool matched = false;
};

struct PRPoint {
  double recall = 0.0;
  double precision = 0.0;
};

struct PRCurve {
  ClassLabel label = ClassLabel::kText;
  double iou_threshold = 0.5;
  std::vector<PRPoint> points;  // recall non-decreasing
};

// Cumulative precision/recall after each detection. Input is stably sorted
// by score descending first, so callers control the order of equal scores.
std::vector<PRPoint> pr_points(std::span<const ScoredMatch> matches, std::size_t total_gt);

// 101-point interpolated average precision over the monotone precision
// envelope. Returns nullopt when there is nothing to score (no ground truth
// and no detections); 0 when there is no ground truth but detections exist.
std::optional<double> average_precision(std::span<const ScoredMatch> matches,
                                        std::size_t total_gt);

// Matches of one class from `result`, in cumulation order.
std::vector<ScoredMatch> class_matches(const MatchResult& result, ClassLabel label);

// Mean AP over classes with ground truth. Throws NoGroundTruth.
double map_at(const MatchResult& result);
double map_at(std::span<const PageRecord> pages, double iou_threshold);
// Mean of map_at over the ten COCO thresholds.
double map_50_95(std::span<const PageRecord> pages);

struct EvalConfig {
  double score_threshold = 0.25;  // operating point for P/R/F1 and counts
  double iou_threshold = 0.5;     // matching threshold at the operating point
  double empty_precision = 1.0;   // value for 0/0 precision
  double empty_recall = 1.0;      // value for 0/0 recall
  unsigned jobs = 1;
};

struct MetricRow {
  std::optional<ClassLabel> label;  // nullopt for the aggregate row
  double precision = 0, recall = 0, f1 = 0, ap50 = 0, ap50_95 = 0;
  std::size_t tp = 0, fp = 0, fn = 0;
};

struct EvalReport {
  EvalConfig config;
  std::vector<MetricRow> classes;  // classes with ground truth or detections
  MetricRow aggregate;
};

// Assembles a report from the matching at the operating IoU and the ten
// sweep matchings. Throws NoGroundTruth.
EvalReport build_report(const MatchResult& operating,
                        std::span<const MatchResult, kNumCocoThresholds> sweep,
                        const EvalConfig& cfg);

// Matching, AP sweep and report in one call.
EvalReport evaluate(std::span<const PageRecord> pages, const EvalConfig& cfg = {});

std::string render_report_json(const EvalReport& report);
// Reads the JSON produced by render_report_json; "classes" and "config" may
// be omitted.
EvalReport parse_report_json(std::string_view text);
// Metric/Value table with mAP50, mAP50-95, Precision and Recall, followed by
// a per-class table when the report has class rows.
std::string render_report_text(const EvalReport& report);
// One-line summary: "mAP50 <v> mAP50-95 <v> P <v> R <v> F1 <v>".
std::string render_summary_line(const EvalReport& report);

}  // namespace doclayout
