#include "doclayout/metrics.hpp"

#include <algorithm>
#include <future>
#include <numeric>
#include <set>
#include <tuple>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "doclayout/errors.hpp"
#include "doclayout/geometry.hpp"

namespace doclayout {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::array<double, kNumCocoThresholds> coco_iou_thresholds() {
  std::array<double, kNumCocoThresholds> t{};
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = static_cast<double>(50 + 5 * k) / 100.0;
  return t;
}

MatchResult match_detections(std::span<const PageRecord> pages, double iou_threshold) {
  MatchResult result;
  result.iou_threshold = iou_threshold;

  for (const auto& page : pages) {
    auto& unmatched = result.unmatched_gt[page.page_id];
    unmatched.fill(0);
    for (const ClassLabel c : kAllClasses) {
      std::vector<std::size_t> gts;
      for (std::size_t g = 0; g < page.annotations.size(); ++g) {
        if (page.annotations[g].label == c) gts.push_back(g);
      }
      std::vector<std::size_t> dets;
      for (std::size_t d = 0; d < page.detections.size(); ++d) {
        if (page.detections[d].label == c) dets.push_back(d);
      }
      std::stable_sort(dets.begin(), dets.end(), [&](std::size_t a, std::size_t b) {
        return page.detections[a].score > page.detections[b].score;
      });

      std::vector<bool> taken(gts.size(), false);
      for (const std::size_t d : dets) {
        const auto& det = page.detections[d];
        double best_iou = -1.0;
        std::size_t best = gts.size();
        for (std::size_t k = 0; k < gts.size(); ++k) {
          if (taken[k]) continue;
          const double v = iou(det.bbox, page.annotations[gts[k]].bbox);
          if (v > best_iou) {
            best_iou = v;
            best = k;
          }
        }
        MatchedDetection m{page.page_id, d, c, det.score, false, 0.0};
        if (best < gts.size() && best_iou >= iou_threshold) {
          taken[best] = true;
          m.matched = true;
          m.matched_iou = best_iou;
        }
        result.detections.push_back(std::move(m));
      }
      const auto free_gts = static_cast<std::size_t>(std::count(taken.begin(), taken.end(), false));
      unmatched[static_cast<std::size_t>(class_id(c))] = free_gts;
      result.gt_count[static_cast<std::size_t>(class_id(c))] += gts.size();
    }
  }

  std::sort(result.detections.begin(), result.detections.end(),
            [](const MatchedDetection& a, const MatchedDetection& b) {
              return std::tie(b.score, a.page_id, a.det_index) <
                     std::tie(a.score, b.page_id, b.det_index);
            });
  return result;
}

std::vector<PageRecord> join_detections(std::span<const PageRecord> ground_truth,
                                        std::span<const PageRecord> detection_pages) {
  std::vector<PageRecord> out(ground_truth.begin(), ground_truth.end());
  for (const auto& dp : detection_pages) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const PageRecord& p) { return p.page_id == dp.page_id; });
    if (it == out.end()) throw PageMismatch(dp.page_id);
    it->detections = dp.detections;
  }
  return out;
}

double precision(std::size_t tp, std::size_t fp, double if_empty) {
  if (tp + fp == 0) return if_empty;
  return static_cast<double>(tp) / static_cast<double>(tp + fp);
}

double recall(std::size_t tp, std::size_t fn, double if_empty) {
  if (tp + fn == 0) return if_empty;
  return static_cast<double>(tp) / static_cast<double>(tp + fn);
}

double f1(double p, double r) {
  if (p + r <= 0) return 0.0;
  return 2 * p * r / (p + r);
}

std::vector<PRPoint> pr_points(std::span<const ScoredMatch> matches, std::size_t total_gt) {
  std::vector<ScoredMatch> sorted(matches.begin(), matches.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const ScoredMatch& a, const ScoredMatch& b) { return a.score > b.score; });
  std::vector<PRPoint> points;
  points.reserve(sorted.size());
  std::size_t tp = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i].matched) ++tp;
    const double r = total_gt ? static_cast<double>(tp) / static_cast<double>(total_gt) : 0.0;
    points.push_back({r, static_cast<double>(tp) / static_cast<double>(i + 1)});
  }
  return points;
}

std::optional<double> average_precision(std::span<const ScoredMatch> matches,
                                        std::size_t total_gt) {
  if (total_gt == 0) {
    if (matches.empty()) return std::nullopt;
    return 0.0;
  }
  auto points = pr_points(matches, total_gt);
  // Monotone envelope: precision at i becomes the max precision at any
  // later (higher or equal recall) point.
  for (std::size_t i = points.size(); i-- > 1;) {
    points[i - 1].precision = std::max(points[i - 1].precision, points[i].precision);
  }
  double sum = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double r = k / 100.0;
    const auto it = std::lower_bound(points.begin(), points.end(), r,
                                     [](const PRPoint& p, double v) { return p.recall < v; });
    if (it != points.end()) sum += it->precision;
  }
  return sum / 101.0;
}

std::vector<ScoredMatch> class_matches(const MatchResult& result, ClassLabel label) {
  std::vector<ScoredMatch> out;
  for (const auto& m : result.detections) {
    if (m.label == label) out.push_back({m.score, m.matched});
  }
  return out;
}

namespace {

std::size_t total_gt(const MatchResult& r) {
  return std::accumulate(r.gt_count.begin(), r.gt_count.end(), std::size_t{0});
}

std::array<std::optional<double>, kNumClasses> class_aps(const MatchResult& r) {
  std::array<std::optional<double>, kNumClasses> aps;
  for (const ClassLabel c : kAllClasses) {
    const auto i = static_cast<std::size_t>(class_id(c));
    aps[i] = average_precision(class_matches(r, c), r.gt_count[i]);
  }
  return aps;
}

std::array<MatchResult, kNumCocoThresholds> sweep_matches(std::span<const PageRecord> pages,
                                                          unsigned jobs) {
  const auto thresholds = coco_iou_thresholds();
  std::array<MatchResult, kNumCocoThresholds> out;
  if (jobs <= 1) {
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = match_detections(pages, thresholds[k]);
    return out;
  }
  std::vector<std::future<MatchResult>> futures;
  for (std::size_t k = 0; k < out.size(); ++k) {
    futures.push_back(std::async(std::launch::async, [pages, t = thresholds[k]] {
      return match_detections(pages, t);
    }));
  }
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = futures[k].get();
  return out;
}

}  // namespace

double map_at(const MatchResult& result) {
  if (total_gt(result) == 0) throw NoGroundTruth();
  const auto aps = class_aps(result);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    if (result.gt_count[i] == 0) continue;
    sum += aps[i].value_or(0.0);
    ++n;
  }
  return sum / static_cast<double>(n);
}

double map_at(std::span<const PageRecord> pages, double iou_threshold) {
  return map_at(match_detections(pages, iou_threshold));
}

double map_50_95(std::span<const PageRecord> pages) {
  double sum = 0.0;
  for (const double t : coco_iou_thresholds()) sum += map_at(pages, t);
  return sum / static_cast<double>(kNumCocoThresholds);
}

EvalReport build_report(const MatchResult& operating,
                        std::span<const MatchResult, kNumCocoThresholds> sweep,
                        const EvalConfig& cfg) {
  if (total_gt(operating) == 0) throw NoGroundTruth();

  std::array<std::array<std::optional<double>, kNumClasses>, kNumCocoThresholds> aps;
  for (std::size_t k = 0; k < kNumCocoThresholds; ++k) aps[k] = class_aps(sweep[k]);

  EvalReport report;
  report.config = cfg;
  std::size_t tp_all = 0, fp_all = 0, fn_all = 0;
  for (const ClassLabel c : kAllClasses) {
    const auto i = static_cast<std::size_t>(class_id(c));
    std::size_t tp = 0, fp = 0, seen = 0;
    for (const auto& m : operating.detections) {
      if (m.label != c) continue;
      ++seen;
      if (m.score < cfg.score_threshold) continue;
      (m.matched ? tp : fp) += 1;
    }
    const std::size_t gt = operating.gt_count[i];
    if (gt == 0 && seen == 0) continue;
    const std::size_t fn = gt - tp;

    MetricRow row;
    row.label = c;
    row.tp = tp;
    row.fp = fp;
    row.fn = fn;
    row.precision = precision(tp, fp, cfg.empty_precision);
    row.recall = recall(tp, fn, cfg.empty_recall);
    row.f1 = f1(row.precision, row.recall);
    row.ap50 = aps[0][i].value_or(0.0);
    double sum = 0.0;
    for (std::size_t k = 0; k < kNumCocoThresholds; ++k) sum += aps[k][i].value_or(0.0);
    row.ap50_95 = sum / static_cast<double>(kNumCocoThresholds);
    report.classes.push_back(row);

    tp_all += tp;
    fp_all += fp;
    fn_all += fn;
  }

  auto& agg = report.aggregate;
  agg.tp = tp_all;
  agg.fp = fp_all;
  agg.fn = fn_all;
  agg.precision = precision(tp_all, fp_all, cfg.empty_precision);
  agg.recall = recall(tp_all, fn_all, cfg.empty_recall);
  agg.f1 = f1(agg.precision, agg.recall);
  agg.ap50 = map_at(sweep[0]);
  double sum = 0.0;
  for (const auto& r : sweep) sum += map_at(r);
  agg.ap50_95 = sum / static_cast<double>(kNumCocoThresholds);
  return report;
}

EvalReport evaluate(std::span<const PageRecord> pages, const EvalConfig& cfg) {
  const auto sweep = sweep_matches(pages, cfg.jobs);
  const auto thresholds = coco_iou_thresholds();
  const auto same = std::find(thresholds.begin(), thresholds.end(), cfg.iou_threshold);
  if (same != thresholds.end()) {
    return build_report(sweep[static_cast<std::size_t>(same - thresholds.begin())], sweep, cfg);
  }
  return build_report(match_detections(pages, cfg.iou_threshold), sweep, cfg);
}

namespace {

ordered_json row_json(const MetricRow& r) {
  ordered_json o;
  if (r.label) o["class"] = std::string(name_of(*r.label));
  o["ap50"] = r.ap50;
  o["ap50_95"] = r.ap50_95;
  o["precision"] = r.precision;
  o["recall"] = r.recall;
  o["f1"] = r.f1;
  o["tp"] = r.tp;
  o["fp"] = r.fp;
  o["fn"] = r.fn;
  return o;
}

MetricRow row_from_json(const json& o, const std::string& path, bool with_class) {
  if (!o.is_object()) throw SchemaError(path, "expected an object");
  MetricRow r;
  auto num = [&](const char* key) {
    const auto it = o.find(key);
    if (it == o.end() || !it->is_number()) throw SchemaError(path + "." + key, "expected a number");
    const double v = it->get<double>();
    if (v < 0 || v > 1) throw SchemaError(path + "." + key, "outside [0,1]");
    return v;
  };
  auto count = [&](const char* key) -> std::size_t {
    const auto it = o.find(key);
    if (it == o.end()) return 0;
    if (!it->is_number_unsigned()) throw SchemaError(path + "." + key, "expected a count");
    return it->get<std::size_t>();
  };
  if (with_class) {
    const auto it = o.find("class");
    if (it == o.end() || !it->is_string()) throw SchemaError(path + ".class", "expected a string");
    r.label = class_from_name(it->get<std::string>());
  }
  r.ap50 = num("ap50");
  r.ap50_95 = num("ap50_95");
  r.precision = num("precision");
  r.recall = num("recall");
  r.f1 = o.contains("f1") ? num("f1") : f1(r.precision, r.recall);
  r.tp = count("tp");
  r.fp = count("fp");
  r.fn = count("fn");
  return r;
}

// Three decimals with trailing zeros dropped: 0.970 -> 0.97, 1.000 -> 1.0.
std::string short_value(double v) {
  std::string s = fmt::format("{:.3f}", v);
  while (s.size() > 1 && s.back() == '0' && s[s.size() - 2] != '.') s.pop_back();
  return s;
}

}  // namespace

std::string render_report_json(const EvalReport& report) {
  ordered_json root;
  root["config"] = {{"score_threshold", report.config.score_threshold},
                    {"iou_threshold", report.config.iou_threshold},
                    {"empty_precision", report.config.empty_precision},
                    {"empty_recall", report.config.empty_recall}};
  root["classes"] = ordered_json::array();
  for (const auto& r : report.classes) root["classes"].push_back(row_json(r));
  root["aggregate"] = row_json(report.aggregate);
  return root.dump(2) + "\n";
}

EvalReport parse_report_json(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError("$", std::string("invalid JSON: ") + e.what());
  }
  if (!root.is_object()) throw SchemaError("$", "expected an object");
  EvalReport report;
  if (const auto it = root.find("config"); it != root.end()) {
    if (!it->is_object()) throw SchemaError("$.config", "expected an object");
    report.config.score_threshold = it->value("score_threshold", report.config.score_threshold);
    report.config.iou_threshold = it->value("iou_threshold", report.config.iou_threshold);
    report.config.empty_precision = it->value("empty_precision", report.config.empty_precision);
    report.config.empty_recall = it->value("empty_recall", report.config.empty_recall);
  }
  if (const auto it = root.find("classes"); it != root.end()) {
    if (!it->is_array()) throw SchemaError("$.classes", "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      report.classes.push_back(
          row_from_json((*it)[i], "$.classes[" + std::to_string(i) + "]", true));
    }
  }
  const auto agg = root.find("aggregate");
  if (agg == root.end()) throw SchemaError("$.aggregate", "missing required field");
  report.aggregate = row_from_json(*agg, "$.aggregate", false);
  return report;
}

std::string render_report_text(const EvalReport& report) {
  const auto& a = report.aggregate;
  std::string out = fmt::format("{:<10}{}\n", "Metric", "Value");
  out += fmt::format("{:<10}{}\n", "mAP50", short_value(a.ap50));
  out += fmt::format("{:<10}{}\n", "mAP50-95", short_value(a.ap50_95));
  out += fmt::format("{:<10}{}\n", "Precision", short_value(a.precision));
  out += fmt::format("{:<10}{}\n", "Recall", short_value(a.recall));
  if (report.classes.empty()) return out;

  out += fmt::format("\n{:<15}{:>10}{:>10}{:>10}{:>10}{:>10}{:>8}{:>8}{:>8}\n", "Class",
                     "Precision", "Recall", "F1", "AP50", "AP50-95", "TP", "FP", "FN");
  auto line = [&](std::string_view name, const MetricRow& r) {
    out += fmt::format("{:<15}{:>10.3f}{:>10.3f}{:>10.3f}{:>10.3f}{:>10.3f}{:>8}{:>8}{:>8}\n",
                       name, r.precision, r.recall, r.f1, r.ap50, r.ap50_95, r.tp, r.fp, r.fn);
  };
  for (const auto& r : report.classes) line(name_of(*r.label), r);
  line("all", a);
  return out;
}

std::string render_summary_line(const EvalReport& report) {
  const auto& a = report.aggregate;
  return fmt::format("mAP50 {:.4f} mAP50-95 {:.4f} P {:.4f} R {:.4f} F1 {:.4f}", a.ap50,
                     a.ap50_95, a.precision, a.recall, a.f1);
}

}  // namespace doclayout
