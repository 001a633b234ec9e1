// Deterministic layout detector for tests.
//
//   mock_detector [--fail] [--empty] <image_path>
//
// Prints YOLO lines with scores for a two-column journal page: a title,
// four text blocks, a figure group and a table group, plus near-duplicate
// and low-score boxes that post-processing is expected to remove. Small
// offsets derived from the file name make pages differ.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>

namespace {

std::uint32_t fnv1a(const std::string& s) {
  std::uint32_t h = 2166136261u;
  for (unsigned char c : s) {
    h ^= c;
    h *= 16777619u;
  }
  return h;
}

void emit(int cls, double x1, double y1, double x2, double y2, double score) {
  std::printf("%d %.6f %.6f %.6f %.6f %.6f\n", cls, (x1 + x2) / 2, (y1 + y2) / 2, x2 - x1, y2 - y1,
              score);
}

}  // namespace

int main(int argc, char** argv) {
  bool fail = false, empty = false;
  int i = 1;
  for (; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--fail") fail = true;
    else if (a == "--empty") empty = true;
    else break;
  }
  if (argc - i != 1) {
    std::fprintf(stderr, "usage: mock_detector [--fail] [--empty] <image_path>\n");
    return 64;
  }
  if (fail) return 5;
  if (empty) return 0;

  const std::uint32_t h = fnv1a(std::filesystem::path(argv[i]).filename().string());
  const double dy = static_cast<double>(h % 20) / 1000.0;  // 0 .. 0.019

  emit(0, 0.10, 0.04 + dy, 0.90, 0.09 + dy, 0.95);                // title
  emit(1, 0.06, 0.12 + dy, 0.47, 0.40, 0.91);                      // left text, top
  emit(1, 0.065, 0.125 + dy, 0.47, 0.40, 0.62);                    // duplicate of it
  emit(1, 0.06, 0.42, 0.47, 0.60, 0.88);                           // left text, bottom
  emit(4, 0.06, 0.62, 0.47, 0.95, 0.86);                           // figure group
  emit(2, 0.08, 0.63, 0.45, 0.88, 0.90);                           // image
  emit(3, 0.08, 0.89, 0.45, 0.94, 0.80);                           // figure caption
  emit(6, 0.53, 0.12 + dy, 0.94, 0.45, 0.84);                      // table group
  emit(3, 0.55, 0.13 + dy, 0.92, 0.17 + dy, 0.77);                 // table caption
  emit(5, 0.55, 0.18 + dy, 0.92, 0.44, 0.93);                      // table
  emit(1, 0.53, 0.48, 0.94, 0.70, 0.90);                           // right text, top
  emit(1, 0.53, 0.72, 0.94, 0.95, 0.87);                           // right text, bottom
  emit(1, 0.53, 0.72, 0.60, 0.75, 0.10);                           // below score threshold
  return 0;
}
