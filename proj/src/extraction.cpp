#include "doclayout/extraction.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <opencv2/imgcodecs.hpp>

#include "doclayout/subprocess.hpp"

namespace doclayout {

namespace fs = std::filesystem;
using json = nlohmann::json;

void ExtractionRoutes::validate() const {
  std::set<ClassLabel> claimed(skip.begin(), skip.end());
  for (const auto& b : backends) {
    if (b.command.empty()) throw Error("backend '" + b.name + "' has no command");
    for (const ClassLabel c : b.classes) {
      if (is_group(c)) {
        throw Error("group class '" + std::string(name_of(c)) + "' cannot be routed");
      }
      if (!claimed.insert(c).second) {
        throw Error("class '" + std::string(name_of(c)) + "' is routed more than once");
      }
    }
  }
}

namespace {

// Resolves a leaf class: backend index, crop (nullopt), or skip (false).
bool resolve(const ExtractionRoutes& routes, ClassLabel c, std::optional<std::size_t>& backend) {
  if (routes.skip.contains(c)) return false;
  for (std::size_t i = 0; i < routes.backends.size(); ++i) {
    if (routes.backends[i].classes.contains(c)) {
      backend = i;
      return true;
    }
  }
  if (c == ClassLabel::kImage) {
    backend.reset();
    return true;
  }
  throw UnroutedClass(c);
}

void plan_components(const std::vector<LayoutComponent>& comps, const ExtractionRoutes& routes,
                     std::vector<std::size_t>& path, std::vector<PlannedCall>& out) {
  for (std::size_t i = 0; i < comps.size(); ++i) {
    path.push_back(i);
    const auto& c = comps[i];
    if (is_group(c.label)) {
      plan_components(c.children, routes, path, out);
    } else {
      std::optional<std::size_t> backend;
      if (resolve(routes, c.label, backend)) out.push_back({path, c.label, c.bbox, backend});
    }
    path.pop_back();
  }
}

bool valid_utf8(const std::string& s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t n = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      n = 1;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      n = 2;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      n = 3;
      cp = c & 0x07;
    } else {
      return false;
    }
    for (std::size_t k = 1; k <= n; ++k) {
      if (i + k >= s.size()) return false;
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // Overlong forms, surrogates and values past U+10FFFF.
    if ((n == 1 && cp < 0x80) || (n == 2 && cp < 0x800) || (n == 3 && cp < 0x10000) ||
        (cp >= 0xD800 && cp <= 0xDFFF) || cp > 0x10FFFF) {
      return false;
    }
    i += n + 1;
  }
  return true;
}

struct TempDir {
  fs::path path;
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "doclayout-XXXXXX").string();
    if (!::mkdtemp(tmpl.data())) throw Error("cannot create temporary directory");
    path = tmpl;
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

cv::Rect crop_rect(const BBox& b, int pad, int w, int h) {
  const int x0 = std::clamp(static_cast<int>(std::floor(b.x1() - pad)), 0, w);
  const int y0 = std::clamp(static_cast<int>(std::floor(b.y1() - pad)), 0, h);
  const int x1 = std::clamp(static_cast<int>(std::ceil(b.x2() + pad)), 0, w);
  const int y1 = std::clamp(static_cast<int>(std::ceil(b.y2() + pad)), 0, h);
  return {x0, y0, x1 - x0, y1 - y0};
}

ExtractionResult run_call(std::size_t index, const PlannedCall& call, const ExtractionPlan& plan,
                          const ExtractionRoutes& routes, const cv::Mat& image,
                          const ExtractionOptions& opts, const fs::path& scratch) {
  const auto start = std::chrono::steady_clock::now();
  ExtractionResult res;
  res.path = call.path;
  res.label = call.label;
  res.backend = call.backend ? routes.backends[*call.backend].name : "crop";
  auto fail = [&](ExtractionError::Kind kind, std::string msg) {
    res.error = ExtractionError{kind, std::move(msg)};
  };

  const cv::Rect rect = crop_rect(call.bbox, opts.pad, image.cols, image.rows);
  if (rect.width <= 0 || rect.height <= 0) {
    fail(ExtractionError::Kind::kIo, "empty crop");
  } else if (!call.backend) {
    const std::string name = fmt::format("{}_{}.png", plan.page_id, index);
    const fs::path dir = opts.output_dir / opts.crops_subdir;
    try {
      fs::create_directories(dir);
      if (!cv::imwrite((dir / name).string(), image(rect))) {
        fail(ExtractionError::Kind::kIo, "cannot write crop");
      } else {
        res.payload = (fs::path(opts.crops_subdir) / name).generic_string();
      }
    } catch (const std::exception& e) {
      fail(ExtractionError::Kind::kIo, e.what());
    }
  } else {
    const auto& backend = routes.backends[*call.backend];
    const fs::path png = scratch / fmt::format("{}_{}.png", index, name_of(call.label));
    bool written = false;
    try {
      written = cv::imwrite(png.string(), image(rect));
    } catch (const cv::Exception& e) {
      fail(ExtractionError::Kind::kIo, e.what());
    }
    if (!written && !res.error) fail(ExtractionError::Kind::kIo, "cannot write crop");
    if (written) {
      std::vector<std::string> argv = backend.command;
      argv.push_back(png.string());
      argv.emplace_back(name_of(call.label));
      ProcessOptions popts;
      popts.timeout = backend.timeout;
      popts.max_output = opts.max_output;
      popts.env = {{"DOCLAYOUT_PAGE_ID", plan.page_id},
                   {"DOCLAYOUT_CLASS", std::string(name_of(call.label))},
                   {"DOCLAYOUT_BBOX", format_bbox(call.bbox)}};
      try {
        const auto pr = run_process(argv, popts);
        if (pr.timed_out) {
          fail(ExtractionError::Kind::kTimeout,
               fmt::format("backend '{}' timed out after {} ms", backend.name, backend.timeout.count()));
        } else if (pr.output_overflow) {
          fail(ExtractionError::Kind::kMalformedOutput,
               fmt::format("backend '{}' output exceeds {} bytes", backend.name, opts.max_output));
        } else if (pr.signaled) {
          fail(ExtractionError::Kind::kCrash,
               fmt::format("backend '{}' killed by signal {}", backend.name, pr.signal));
        } else if (pr.exit_code != 0) {
          fail(ExtractionError::Kind::kCrash,
               fmt::format("backend '{}' exited with code {}", backend.name, pr.exit_code));
        } else if (call.label == ClassLabel::kTable) {
          if (auto table = parse_table_output(pr.out)) {
            res.payload = std::move(*table);
          } else {
            fail(ExtractionError::Kind::kMalformedOutput,
                 fmt::format("backend '{}' returned malformed table JSON", backend.name));
          }
        } else if (auto text = parse_text_output(pr.out)) {
          res.payload = std::move(*text);
        } else {
          fail(ExtractionError::Kind::kMalformedOutput,
               fmt::format("backend '{}' returned invalid UTF-8", backend.name));
        }
      } catch (const Error& e) {
        fail(ExtractionError::Kind::kCrash, e.what());
      }
      std::error_code ec;
      fs::remove(png, ec);
    }
  }
  res.elapsed_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

LayoutComponent& at_path(std::vector<LayoutComponent>& comps, const std::vector<std::size_t>& path) {
  if (path.empty()) throw std::invalid_argument("empty component path");
  std::vector<LayoutComponent>* level = &comps;
  LayoutComponent* node = nullptr;
  for (const std::size_t i : path) {
    if (i >= level->size()) throw std::invalid_argument("result references a missing component");
    node = &(*level)[i];
    level = &node->children;
  }
  return *node;
}

}  // namespace

std::string_view to_string(ExtractionError::Kind kind) {
  switch (kind) {
    case ExtractionError::Kind::kTimeout: return "timeout";
    case ExtractionError::Kind::kCrash: return "crash";
    case ExtractionError::Kind::kMalformedOutput: return "malformed_output";
    case ExtractionError::Kind::kIo: return "io";
  }
  return "unknown";
}

ExtractionPlan route(const PageLayout& layout, const ExtractionRoutes& routes) {
  routes.validate();
  ExtractionPlan plan;
  plan.page_id = layout.page_id;
  plan.image_width = layout.image_width;
  plan.image_height = layout.image_height;
  std::vector<std::size_t> path;
  plan_components(layout.components, routes, path, plan.calls);
  return plan;
}

std::vector<ExtractionResult> run_extraction(const ExtractionPlan& plan, const ExtractionRoutes& routes,
                                             const cv::Mat& page_image,
                                             const ExtractionOptions& opts) {
  if (page_image.cols != plan.image_width || page_image.rows != plan.image_height) {
    throw Error(fmt::format("page '{}': image is {}x{}, layout expects {}x{}", plan.page_id,
                            page_image.cols, page_image.rows, plan.image_width,
                            plan.image_height));
  }
  std::vector<ExtractionResult> results(plan.calls.size());
  if (plan.calls.empty()) return results;
  TempDir scratch;

  const unsigned workers =
      std::clamp<unsigned>(opts.parallelism, 1, static_cast<unsigned>(plan.calls.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < plan.calls.size(); ++i) {
      results[i] = run_call(i, plan.calls[i], plan, routes, page_image, opts, scratch.path);
    }
    return results;
  }
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < plan.calls.size(); i = next++) {
          results[i] = run_call(i, plan.calls[i], plan, routes, page_image, opts, scratch.path);
        }
      });
    }
  }
  return results;
}

PageLayout merge_results(PageLayout layout, const std::vector<ExtractionResult>& results) {
  for (const auto& r : results) {
    auto& c = at_path(layout.components, r.path);
    if (c.label != r.label) throw std::invalid_argument("result class differs from component");
    if (r.error) {
      c.data = std::monostate{};
      c.error = std::string(to_string(r.error->kind)) + ": " + r.error->message;
    } else {
      c.data = r.payload;
      c.error.reset();
    }
  }
  return layout;
}

std::optional<std::string> parse_text_output(const std::string& out) {
  if (!valid_utf8(out)) return std::nullopt;
  std::string text = out;
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
  return text;
}

std::optional<TableCells> parse_table_output(const std::string& out) {
  const json doc = json::parse(out, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return std::nullopt;
  const auto rows = doc.find("rows");
  if (rows == doc.end() || !rows->is_array()) return std::nullopt;
  std::vector<std::vector<std::string>> cells;
  for (const auto& row : *rows) {
    if (!row.is_array()) return std::nullopt;
    auto& r = cells.emplace_back();
    for (const auto& cell : row) {
      if (!cell.is_string()) return std::nullopt;
      r.push_back(cell.get<std::string>());
    }
  }
  return rectangularize(std::move(cells));
}

std::string format_bbox(const BBox& b) {
  auto r = [](double v) { return std::round(v * 100.0) / 100.0; };
  return fmt::format("{},{},{},{}", r(b.x1()), r(b.y1()), r(b.x2()), r(b.y2()));
}

}  // namespace doclayout
