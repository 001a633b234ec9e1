#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "doclayout/core_model.hpp"
#include "doclayout/formats.hpp"

namespace doclayout {

// Sidecar files: <dir>/<page_id>.txt holding YOLO lines with scores.
struct FilesDetector {
  std::filesystem::path dir;
};

// External detector run as `<command...> <image_path>`; it prints YOLO lines
// with scores on standard output and exits 0.
struct CommandDetector {
  std::vector<std::string> command;
  std::chrono::milliseconds timeout{30'000};
};

using DetectorSpec = std::variant<FilesDetector, CommandDetector>;

// Detections for one page, scaled by the page size and clamped. A missing
// sidecar yields no detections and a logged warning. Throws MalformedLine /
// OutOfRange / UnknownClass on bad labels and BackendError when the command
// fails.
std::vector<Detection> load_detections(const DetectorSpec& spec, const PageRecord& page,
                                       const std::filesystem::path& image_path,
                                       const ClassMap& classes = ClassMap());

}  // namespace doclayout
