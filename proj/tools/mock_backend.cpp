// Deterministic extraction backend for tests.
//
//   mock_backend [--exit N] [--sleep MS] [--garbage] [--huge] <png_path> <class_name>
//
// Text classes print "MOCK:<class>:<x1>,<y1>,<x2>,<y2>" using DOCLAYOUT_BBOX;
// tables print a two-row table whose second row is one cell short.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>

int main(int argc, char** argv) {
  int exit_code = 0;
  int sleep_ms = 0;
  bool garbage = false, huge = false;
  int i = 1;
  for (; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--exit" && i + 1 < argc) exit_code = std::atoi(argv[++i]);
    else if (a == "--sleep" && i + 1 < argc) sleep_ms = std::atoi(argv[++i]);
    else if (a == "--garbage") garbage = true;
    else if (a == "--huge") huge = true;
    else break;
  }
  if (argc - i != 2) {
    std::cerr << "usage: mock_backend [options] <png_path> <class_name>\n";
    return 64;
  }
  const std::string png = argv[i];
  const std::string cls = argv[i + 1];
  if (!std::filesystem::is_regular_file(png) || std::filesystem::file_size(png) == 0) {
    std::cerr << "mock_backend: missing crop " << png << "\n";
    return 3;
  }
  if (sleep_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(sleep_ms));
  if (exit_code != 0) {
    std::cerr << "mock_backend: failing on purpose\n";
    return exit_code;
  }
  if (huge) {
    const std::string chunk(1 << 20, 'x');
    for (int k = 0; k < 11; ++k) std::fwrite(chunk.data(), 1, chunk.size(), stdout);
    return 0;
  }
  if (garbage) {
    std::cout << "{\"rows\": [[1, 2], oops\n";
    return 0;
  }
  const char* env = std::getenv("DOCLAYOUT_BBOX");
  const std::string bbox = env ? env : "?";
  if (cls == "table") {
    std::cout << "{\"rows\": [[\"MOCK:table:" << bbox << "\", \"r0c1\"], [\"r1c0\"]]}\n";
  } else {
    std::cout << "MOCK:" << cls << ":" << bbox << "\n";
  }
  return 0;
}
