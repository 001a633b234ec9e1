#include "doclayout/pipeline.hpp"

#include <algorithm>
#include <array>
#include <chrono>

#include <opencv2/imgcodecs.hpp>

#include "doclayout/errors.hpp"

namespace doclayout {

namespace fs = std::filesystem;

namespace {

constexpr std::array<const char*, 5> kImageExtensions = {".png", ".jpg", ".jpeg", ".tif", ".tiff"};

}  // namespace

PageOutcome process_page(const PageInput& input, const PipelineConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const PageRecord& page = input.page;

  const cv::Mat image = cv::imread(input.image_path.string(), cv::IMREAD_COLOR);
  if (image.empty()) throw Error("cannot read page image '" + input.image_path.string() + "'");

  std::vector<Detection> raw = cfg.detector
                                   ? load_detections(*cfg.detector, page, input.image_path, cfg.classes)
                                   : page.detections;
  const auto final_dets = postprocess(raw, cfg.postprocess);

  PageOutcome outcome;
  PageLayout layout =
      assemble_page(page.page_id, page.image_width, page.image_height, final_dets, cfg.assembly);
  const ExtractionPlan plan = route(layout, cfg.routes);
  const auto results = run_extraction(plan, cfg.routes, image, cfg.extraction);
  outcome.calls = results.size();
  for (const auto& r : results) {
    outcome.extraction_s += r.elapsed_s;
    if (r.error) ++outcome.failed_calls;
  }
  outcome.layout = merge_results(std::move(layout), results);
  outcome.elapsed_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return outcome;
}

std::optional<fs::path> find_page_image(const fs::path& dir, const std::string& page_id) {
  for (const char* ext : kImageExtensions) {
    fs::path p = dir / (page_id + ext);
    if (fs::is_regular_file(p)) return p;
  }
  return std::nullopt;
}

std::vector<PageInput> pages_from_image_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("'" + dir.string() + "' is not a directory");
  std::vector<PageInput> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (std::find_if(kImageExtensions.begin(), kImageExtensions.end(),
                     [&](const char* e) { return ext == e; }) == kImageExtensions.end()) {
      continue;
    }
    // Header-only reads are not exposed by imgcodecs; decode once for the size.
    const cv::Mat img = cv::imread(entry.path().string(), cv::IMREAD_UNCHANGED);
    if (img.empty()) throw Error("cannot read image '" + entry.path().string() + "'");
    PageInput in;
    in.page.page_id = entry.path().stem().string();
    in.page.image_width = img.cols;
    in.page.image_height = img.rows;
    in.image_path = entry.path();
    out.push_back(std::move(in));
  }
  std::sort(out.begin(), out.end(), [](const PageInput& a, const PageInput& b) {
    return a.page.page_id < b.page.page_id;
  });
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].page.page_id == out[i - 1].page.page_id) throw DuplicatePage(out[i].page.page_id);
  }
  return out;
}

}  // namespace doclayout
