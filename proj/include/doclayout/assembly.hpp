#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "doclayout/core_model.hpp"

namespace doclayout {

// Rectangular table payload: every row has num_cols() cells.
struct TableCells {
  std::vector<std::vector<std::string>> rows;

  std::size_t num_rows() const { return rows.size(); }
  std::size_t num_cols() const { return rows.empty() ? 0 : rows.front().size(); }
  friend bool operator==(const TableCells&, const TableCells&) = default;
};

// Pads short rows with empty strings up to the widest row.
TableCells rectangularize(std::vector<std::vector<std::string>> rows);

// Extracted payload: null, text (or an image crop path), or table cells.
using ComponentData = std::variant<std::monostate, std::string, TableCells>;

struct LayoutComponent {
  BBox bbox;
  ClassLabel label = ClassLabel::kText;
  double score = 1.0;
  // Only group classes (image_caption, table_caption) carry children.
  std::vector<LayoutComponent> children;
  ComponentData data;
  std::optional<std::string> error;

  friend bool operator==(const LayoutComponent&, const LayoutComponent&) = default;
};

struct PageLayout {
  std::string page_id;
  int image_width = 0;
  int image_height = 0;
  std::vector<LayoutComponent> components;  // reading order

  friend bool operator==(const PageLayout&, const PageLayout&) = default;
};

struct ReadingOrderConfig {
  // Boxes whose horizontal overlap reaches this fraction of the narrower
  // width share a column.
  double column_overlap = 0.20;
  // Column clusters closer than this fraction of page width are merged.
  double column_gap = 0.05;
  // Boxes wider than this fraction of page width span columns; they split
  // the page into horizontal bands that are ordered top to bottom.
  double spanning_width = 0.5;
};

struct AssemblyConfig {
  // Minimum intersection-over-child-area for a box to join a group.
  double child_coverage = 0.5;
  ReadingOrderConfig order;
};

// Turns post-NMS detections into components. Each group detection becomes a
// parent; image/table and caption detections covered by a compatible group
// at >= child_coverage join the best-covering group (at most one element and
// one caption per group). Unclaimed detections stay top-level, in input
// order. Children are ordered top-to-bottom.
std::vector<LayoutComponent> group_components(std::span<const Detection> dets,
                                              double child_coverage = 0.5);

// Column-aware reading order; a permutation of `components`.
std::vector<LayoutComponent> reading_order(std::vector<LayoutComponent> components,
                                           double page_width,
                                           const ReadingOrderConfig& cfg = {});

PageLayout assemble_page(const std::string& page_id, int image_width, int image_height,
                         std::span<const Detection> dets, const AssemblyConfig& cfg = {});

// Number of components including children.
std::size_t count_components(std::span<const LayoutComponent> components);

// Pretty-printed JSON with stable key order, coordinates rounded to two
// decimals and a trailing newline.
std::string emit_layout_json(const PageLayout& layout);
PageLayout parse_layout_json(std::string_view text);

}  // namespace doclayout
