#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "doclayout/core_model.hpp"

namespace doclayout {

// Collection of pages plus the class names their labels were read with.
struct Dataset {
  std::vector<PageRecord> pages;
  std::vector<std::string> class_names;
};

std::vector<std::string> canonical_class_names();

// Maps external class ids/names onto the taxonomy. The default instance is
// the identity on canonical ids and names. A names file lists one source
// class per line in source-id order; a line is either a canonical name or
// `source_name=canonical_name`. Blank lines and lines starting with '#' are
// ignored.
class ClassMap {
 public:
  ClassMap();
  static ClassMap from_names_file(std::string_view text);

  ClassLabel by_id(long id) const;
  ClassLabel by_name(std::string_view name) const;
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::vector<ClassLabel> targets_;
};

// YOLO label text: `class_id cx cy w h` per line (annotations) or
// `class_id cx cy w h score` (detections). Normalized values may exceed
// [0,1] by at most 1e-6. Blank lines are skipped; line numbers are 1-based.
std::vector<Annotation> parse_yolo_annotations(std::string_view text, int image_w, int image_h,
                                               const ClassMap& classes = ClassMap());
std::vector<Detection> parse_yolo_detections(std::string_view text, int image_w, int image_h,
                                             const ClassMap& classes = ClassMap());

// Six decimals, one record per line, trailing newline.
std::string emit_yolo_labels(std::span<const Annotation> records, int image_w, int image_h);
std::string emit_yolo_labels(std::span<const Detection> records, int image_w, int image_h);

// Label Studio JSON export (array of tasks, rectanglelabels results with
// percent coordinates). Pages are returned sorted by page_id.
Dataset parse_label_studio(std::string_view json_text, const ClassMap& classes = ClassMap());

// Internal page JSONL, one PageRecord per line.
PageRecord parse_page_line(std::string_view line, std::size_t line_no = 0);
std::string format_page_line(const PageRecord& page);
Dataset read_pages_jsonl(std::string_view text);
std::string write_pages_jsonl(const Dataset& dataset);

// YOLO dataset directory:
//   labels/<page_id>.txt      ground truth
//   detections/<page_id>.txt  scored detections (optional per page)
//   pages.tsv                 page_id<TAB>width<TAB>height
//   classes.txt               class names in id order
// When pages.tsv is absent every page takes `default_size` (w, h).
Dataset read_yolo_dataset(const std::filesystem::path& dir, const ClassMap& classes = ClassMap(),
                          std::optional<std::pair<int, int>> default_size = std::nullopt);
void write_yolo_dataset(const Dataset& dataset, const std::filesystem::path& dir);

// Page ids double as file names; rejects ids containing path separators.
void check_page_id_is_filename(const std::string& page_id);

}  // namespace doclayout
