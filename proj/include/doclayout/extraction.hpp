#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "doclayout/assembly.hpp"
#include "doclayout/core_model.hpp"
#include "doclayout/errors.hpp"

namespace doclayout {

// External extraction program. It is invoked as
//   <command...> <png_path> <class_name>
// and answers on standard output with UTF-8 text (title/text/caption) or
// {"rows": [[str, ...], ...]} (table). Exit code 0 means success. The
// environment additionally carries DOCLAYOUT_PAGE_ID, DOCLAYOUT_CLASS and
// DOCLAYOUT_BBOX ("x1,y1,x2,y2" of the unpadded component box).
struct BackendSpec {
  std::string name;
  std::vector<std::string> command;
  std::set<ClassLabel> classes;
  std::chrono::milliseconds timeout{30'000};
};

// Class -> backend table. Classes listed in `skip` are left without data.
// Images are cropped to files by the built-in crop route unless a backend or
// the skip list claims them. Group classes are never routed.
struct ExtractionRoutes {
  std::vector<BackendSpec> backends;
  std::set<ClassLabel> skip;

  // Throws Error when a class is claimed twice or a group class is routed.
  void validate() const;
};

struct PlannedCall {
  std::vector<std::size_t> path;  // indices from the top-level list down
  ClassLabel label = ClassLabel::kText;
  BBox bbox;
  std::optional<std::size_t> backend;  // index into routes.backends; nullopt = crop
};

struct ExtractionPlan {
  std::string page_id;
  int image_width = 0;
  int image_height = 0;
  std::vector<PlannedCall> calls;  // reading order, children after their parent
};

class UnroutedClass : public Error {
 public:
  explicit UnroutedClass(ClassLabel c)
      : Error("no extraction backend for class '" + std::string(name_of(c)) + "'"), label_(c) {}
  ClassLabel label() const { return label_; }

 private:
  ClassLabel label_;
};

// One call per leaf component in reading order. Throws UnroutedClass.
ExtractionPlan route(const PageLayout& layout, const ExtractionRoutes& routes);

struct ExtractionError {
  enum class Kind { kTimeout, kCrash, kMalformedOutput, kIo };
  Kind kind = Kind::kIo;
  std::string message;
};

std::string_view to_string(ExtractionError::Kind kind);

struct ExtractionResult {
  std::vector<std::size_t> path;
  ClassLabel label = ClassLabel::kText;
  ComponentData payload;
  std::string backend;
  double elapsed_s = 0.0;
  std::optional<ExtractionError> error;
};

struct ExtractionOptions {
  int pad = 2;                 // pixels added on every side of the crop
  unsigned parallelism = 1;    // concurrent backend calls
  std::size_t max_output = 10u * 1024u * 1024u;
  // Image crops land in output_dir/crops_subdir/<page_id>_<n>.png and the
  // payload records the path relative to output_dir.
  std::filesystem::path output_dir = ".";
  std::string crops_subdir = "crops";
};

// Runs every planned call against `page_image`. Per-call failures are
// recorded in the result, never thrown. Results follow plan order. Throws
// Error only when the image size differs from the plan.
std::vector<ExtractionResult> run_extraction(const ExtractionPlan& plan, const ExtractionRoutes& routes,
                                             const cv::Mat& page_image,
                                             const ExtractionOptions& opts = {});

// Copies payloads (or errors) into the addressed components.
PageLayout merge_results(PageLayout layout, const std::vector<ExtractionResult>& results);

// Strips trailing line breaks and checks UTF-8; nullopt when invalid.
std::optional<std::string> parse_text_output(const std::string& out);
// Parses {"rows": [[str, ...], ...]} into a rectangular table.
std::optional<TableCells> parse_table_output(const std::string& out);

// "x1,y1,x2,y2" with coordinates rounded to two decimals.
std::string format_bbox(const BBox& b);

}  // namespace doclayout
