#include "doclayout/detector_source.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "doclayout/errors.hpp"
#include "doclayout/io.hpp"
#include "doclayout/subprocess.hpp"

namespace doclayout {

namespace fs = std::filesystem;

namespace {

std::vector<Detection> from_files(const FilesDetector& spec, const PageRecord& page,
                                  const ClassMap& classes) {
  const fs::path sidecar = spec.dir / (page.page_id + ".txt");
  if (!fs::exists(sidecar)) {
    spdlog::warn("page '{}': no detections file {}, treating as empty", page.page_id,
                 sidecar.string());
    return {};
  }
  return parse_yolo_detections(read_file(sidecar), page.image_width, page.image_height, classes);
}

std::vector<Detection> from_command(const CommandDetector& spec, const PageRecord& page,
                                    const fs::path& image_path, const ClassMap& classes) {
  auto argv = spec.command;
  argv.push_back(image_path.string());
  ProcessOptions opts;
  opts.timeout = spec.timeout;
  opts.env = {{"DOCLAYOUT_PAGE_ID", page.page_id}};
  const auto pr = run_process(argv, opts);
  const std::string& cmd = spec.command.front();
  if (pr.timed_out) {
    throw BackendError(BackendError::Kind::kTimeout,
                       fmt::format("detector '{}' timed out on page '{}'", cmd, page.page_id));
  }
  if (pr.output_overflow) {
    throw BackendError(BackendError::Kind::kMalformedOutput,
                       fmt::format("detector '{}' output too large on page '{}'", cmd, page.page_id));
  }
  if (pr.signaled || pr.exit_code != 0) {
    throw BackendError(BackendError::Kind::kCrash,
                       fmt::format("detector '{}' failed on page '{}' (exit {}, signal {})", cmd,
                                   page.page_id, pr.exit_code, pr.signal),
                       pr.exit_code);
  }
  return parse_yolo_detections(pr.out, page.image_width, page.image_height, classes);
}

}  // namespace

std::vector<Detection> load_detections(const DetectorSpec& spec, const PageRecord& page,
                                       const fs::path& image_path, const ClassMap& classes) {
  if (const auto* files = std::get_if<FilesDetector>(&spec)) return from_files(*files, page, classes);
  const auto& cmd = std::get<CommandDetector>(spec);
  if (cmd.command.empty()) throw Error("detector command is empty");
  return from_command(cmd, page, image_path, classes);
}

}  // namespace doclayout
