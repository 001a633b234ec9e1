#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "doclayout/assembly.hpp"
#include "doclayout/detector_source.hpp"
#include "doclayout/extraction.hpp"
#include "doclayout/formats.hpp"
#include "doclayout/postprocess.hpp"

namespace doclayout {

struct PipelineConfig {
  PostprocessConfig postprocess;
  AssemblyConfig assembly;
  ExtractionRoutes routes;
  ExtractionOptions extraction;
  // When unset, the page's own detections are used.
  std::optional<DetectorSpec> detector;
  ClassMap classes;
};

struct PageInput {
  PageRecord page;
  std::filesystem::path image_path;
};

struct PageOutcome {
  PageLayout layout;
  std::size_t calls = 0;
  std::size_t failed_calls = 0;
  double extraction_s = 0.0;  // sum of per-call elapsed time
  double elapsed_s = 0.0;     // wall time for the whole page
};

// detector -> postprocess -> assemble -> route -> extract -> merge for one
// page. Component failures are recorded in the layout; page-level problems
// (unreadable image, detector failure, unrouted class) throw.
PageOutcome process_page(const PageInput& input, const PipelineConfig& cfg);

// Images next to pages: <dir>/<page_id>.{png,jpg,jpeg,tif,tiff}.
std::optional<std::filesystem::path> find_page_image(const std::filesystem::path& dir,
                                                     const std::string& page_id);

// One page per image in `dir`, sized from the image header, sorted by id.
std::vector<PageInput> pages_from_image_dir(const std::filesystem::path& dir);

}  // namespace doclayout
