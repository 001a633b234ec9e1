#include "doclayout/formats.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "doclayout/errors.hpp"
#include "doclayout/geometry.hpp"
#include "doclayout/io.hpp"

namespace doclayout {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr double kNormTolerance = 1e-6;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    if (i >= s.size()) break;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

// Calls fn(line_no, line) for every line with non-whitespace content.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto end = nl == std::string_view::npos ? text.size() : nl;
    ++line_no;
    const auto line = text.substr(pos, end - pos);
    if (!trim(line).empty()) fn(line_no, line);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
}

std::optional<double> to_double(std::string_view tok) {
  double v = 0;
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<long> to_long(std::string_view tok) {
  long v = 0;
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

template <typename Out>
std::vector<Out> parse_yolo(std::string_view text, int image_w, int image_h,
                            const ClassMap& classes, bool with_scores) {
  if (image_w <= 0 || image_h <= 0) throw Error("image size must be positive");
  const std::size_t expected = with_scores ? 6 : 5;
  std::vector<Out> out;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    const auto toks = split_ws(trim(line));
    if (toks.size() != expected) {
      throw MalformedLine(line_no, fmt::format("expected {} fields, got {}", expected, toks.size()));
    }
    const auto id = to_long(toks[0]);
    if (!id) throw MalformedLine(line_no, "non-integer class id '" + std::string(toks[0]) + "'");
    const ClassLabel label = classes.by_id(*id);
    std::array<double, 5> v{};
    for (std::size_t i = 1; i < expected; ++i) {
      const auto d = to_double(toks[i]);
      if (!d) throw MalformedLine(line_no, "non-numeric field '" + std::string(toks[i]) + "'");
      if (*d < -kNormTolerance || *d > 1.0 + kNormTolerance) {
        throw OutOfRange(line_no, std::string(toks[i]));
      }
      v[i - 1] = std::clamp(*d, 0.0, 1.0);
    }
    const BBox box = from_normalized_center({v[0], v[1], v[2], v[3]}, image_w, image_h);
    if constexpr (std::is_same_v<Out, Detection>) {
      out.emplace_back(box, label, v[4]);
    } else {
      out.push_back(Annotation{box, label});
    }
  });
  return out;
}

// Six decimals up to 1000 px, one more per extra order of magnitude, so a
// round trip stays within 1e-3 px on large scans.
int yolo_decimals(int dim) {
  int d = 6;
  for (long long limit = 1000; dim > limit; limit *= 10) ++d;
  return d;
}

std::string yolo_line(const BBox& b, ClassLabel label, int w, int h, const double* score) {
  const auto n = to_normalized_center(b, w, h);
  auto f = [](double v) { return std::max(v, 0.0); };
  const int dx = yolo_decimals(w), dy = yolo_decimals(h);
  std::string line = fmt::format("{} {:.{}f} {:.{}f} {:.{}f} {:.{}f}", class_id(label), f(n.cx), dx,
                                 f(n.cy), dy, f(n.w), dx, f(n.h), dy);
  if (score) line += fmt::format(" {:.6f}", *score);
  line += '\n';
  return line;
}

// --- JSON helpers -----------------------------------------------------------

const json& require(const json& obj, const char* key, const std::string& path,
                    std::size_t line_no = 0) {
  if (!obj.is_object()) throw SchemaError(path, "expected an object", line_no);
  const auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(path + "." + key, "missing required field", line_no);
  return *it;
}

double require_number(const json& obj, const char* key, const std::string& path,
                      std::size_t line_no = 0) {
  const auto& v = require(obj, key, path, line_no);
  if (!v.is_number()) throw SchemaError(path + "." + key, "expected a number", line_no);
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw SchemaError(path + "." + key, "non-finite number", line_no);
  return d;
}

BBox bbox_from_json(const json& v, const std::string& path, std::size_t line_no) {
  if (!v.is_array() || v.size() != 4) throw SchemaError(path, "expected [x1,y1,x2,y2]", line_no);
  std::array<double, 4> c{};
  for (std::size_t i = 0; i < 4; ++i) {
    if (!v[i].is_number()) {
      throw SchemaError(path + "[" + std::to_string(i) + "]", "expected a number", line_no);
    }
    c[i] = v[i].get<double>();
    if (!std::isfinite(c[i])) {
      throw SchemaError(path + "[" + std::to_string(i) + "]", "non-finite number", line_no);
    }
  }
  return BBox(c[0], c[1], c[2], c[3]);
}

ClassLabel class_field(const json& obj, const std::string& path, std::size_t line_no) {
  const auto& v = require(obj, "class", path, line_no);
  if (!v.is_string()) throw SchemaError(path + ".class", "expected a string", line_no);
  return class_from_name(v.get<std::string>());
}

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& path, std::size_t line_no) {
  for (const auto& [key, _] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw SchemaError(path + "." + key, "unknown field", line_no);
    }
  }
}

int positive_int_field(const json& obj, const char* key, const std::string& path,
                       std::size_t line_no) {
  const auto& v = require(obj, key, path, line_no);
  if (!v.is_number_integer() || v.get<long long>() <= 0 || v.get<long long>() > 1'000'000'000) {
    throw SchemaError(path + "." + key, "expected a positive integer", line_no);
  }
  return static_cast<int>(v.get<long long>());
}

void sort_and_check_unique(std::vector<PageRecord>& pages) {
  std::sort(pages.begin(), pages.end(),
            [](const PageRecord& a, const PageRecord& b) { return a.page_id < b.page_id; });
  for (std::size_t i = 1; i < pages.size(); ++i) {
    if (pages[i].page_id == pages[i - 1].page_id) throw DuplicatePage(pages[i].page_id);
  }
}

// "/data/upload/3/8f2a-page_01.png?x=1" -> "8f2a-page_01"
std::string page_id_from_image_ref(std::string ref) {
  if (const auto q = ref.find_first_of("?#"); q != std::string::npos) ref.resize(q);
  if (const auto slash = ref.find_last_of("/\\"); slash != std::string::npos) {
    ref = ref.substr(slash + 1);
  }
  if (const auto dot = ref.find_last_of('.'); dot != std::string::npos && dot > 0) {
    ref.resize(dot);
  }
  return ref;
}

}  // namespace

std::vector<std::string> canonical_class_names() {
  std::vector<std::string> names;
  for (auto c : kAllClasses) names.emplace_back(name_of(c));
  return names;
}

ClassMap::ClassMap() : names_(canonical_class_names()) {
  targets_.assign(kAllClasses.begin(), kAllClasses.end());
}

ClassMap ClassMap::from_names_file(std::string_view text) {
  ClassMap m;
  m.names_.clear();
  m.targets_.clear();
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    const auto t = trim(line);
    if (t.front() == '#') return;
    std::string_view source = t;
    std::string_view target = t;
    if (const auto eq = t.find('='); eq != std::string_view::npos) {
      source = trim(t.substr(0, eq));
      target = trim(t.substr(eq + 1));
      if (source.empty() || target.empty()) throw MalformedLine(line_no, "empty side of '='");
    }
    m.names_.emplace_back(source);
    m.targets_.push_back(class_from_name(target));
  });
  if (m.names_.empty()) throw Error("class names file lists no classes");
  return m;
}

ClassLabel ClassMap::by_id(long id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= targets_.size()) {
    throw UnknownClass(std::to_string(id));
  }
  return targets_[static_cast<std::size_t>(id)];
}

ClassLabel ClassMap::by_name(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    const auto& n = names_[i];
    if (n.size() == name.size() &&
        std::equal(n.begin(), n.end(), name.begin(), [](char a, char b) {
          return std::tolower(static_cast<unsigned char>(a)) ==
                 std::tolower(static_cast<unsigned char>(b));
        })) {
      return targets_[i];
    }
  }
  throw UnknownClass(std::string(name));
}

std::vector<Annotation> parse_yolo_annotations(std::string_view text, int image_w, int image_h,
                                               const ClassMap& classes) {
  return parse_yolo<Annotation>(text, image_w, image_h, classes, false);
}

std::vector<Detection> parse_yolo_detections(std::string_view text, int image_w, int image_h,
                                             const ClassMap& classes) {
  return parse_yolo<Detection>(text, image_w, image_h, classes, true);
}

std::string emit_yolo_labels(std::span<const Annotation> records, int image_w, int image_h) {
  std::string out;
  for (const auto& r : records) out += yolo_line(r.bbox, r.label, image_w, image_h, nullptr);
  return out;
}

std::string emit_yolo_labels(std::span<const Detection> records, int image_w, int image_h) {
  std::string out;
  for (const auto& r : records) out += yolo_line(r.bbox, r.label, image_w, image_h, &r.score);
  return out;
}

Dataset parse_label_studio(std::string_view json_text, const ClassMap& classes) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw SchemaError("$", std::string("invalid JSON: ") + e.what());
  }
  if (!root.is_array()) throw SchemaError("$", "expected an array of tasks");

  Dataset ds;
  ds.class_names = classes.names();
  for (std::size_t t = 0; t < root.size(); ++t) {
    const std::string tpath = "$[" + std::to_string(t) + "]";
    const json& task = root[t];
    const json& data = require(task, "data", tpath);
    if (!data.is_object()) throw SchemaError(tpath + ".data", "expected an object");

    std::string image_ref;
    if (const auto it = data.find("image"); it != data.end() && it->is_string()) {
      image_ref = it->get<std::string>();
    } else {
      for (const auto& [k, v] : data.items()) {
        if (v.is_string()) {
          image_ref = v.get<std::string>();
          break;
        }
      }
    }
    if (image_ref.empty()) throw SchemaError(tpath + ".data.image", "missing image reference");

    PageRecord page;
    page.page_id = page_id_from_image_ref(image_ref);
    if (page.page_id.empty()) throw SchemaError(tpath + ".data.image", "empty image name");

    // First annotation that was not cancelled; older exports say "completions".
    const json* results = nullptr;
    std::string rpath;
    const char* list_key = task.contains("annotations") ? "annotations" : "completions";
    if (const auto it = task.find(list_key); it != task.end()) {
      if (!it->is_array()) throw SchemaError(tpath + "." + list_key, "expected an array");
      for (std::size_t a = 0; a < it->size(); ++a) {
        const json& ann = (*it)[a];
        const std::string apath = tpath + "." + list_key + "[" + std::to_string(a) + "]";
        if (ann.value("was_cancelled", false)) continue;
        results = &require(ann, "result", apath);
        rpath = apath + ".result";
        if (!results->is_array()) throw SchemaError(rpath, "expected an array");
        break;
      }
    }

    double width = 0, height = 0;
    if (results) {
      for (std::size_t r = 0; r < results->size(); ++r) {
        const json& res = (*results)[r];
        const std::string path = rpath + "[" + std::to_string(r) + "]";
        if (!res.is_object()) throw SchemaError(path, "expected an object");
        if (const auto ty = res.find("type"); ty != res.end() && *ty != "rectanglelabels") {
          throw SchemaError(path + ".type", "only rectanglelabels results are supported");
        }
        const double w = require_number(res, "original_width", path);
        const double h = require_number(res, "original_height", path);
        if (w <= 0 || h <= 0 || w != std::floor(w) || h != std::floor(h)) {
          throw SchemaError(path + ".original_width", "image size must be a positive integer");
        }
        if (width == 0) {
          width = w;
          height = h;
        } else if (w != width || h != height) {
          throw SchemaError(path + ".original_width", "image size differs between results");
        }
        const json& value = require(res, "value", path);
        const std::string vpath = path + ".value";
        const double x = require_number(value, "x", vpath);
        const double y = require_number(value, "y", vpath);
        const double bw = require_number(value, "width", vpath);
        const double bh = require_number(value, "height", vpath);
        if (const auto rot = value.find("rotation");
            rot != value.end() && (!rot->is_number() || std::abs(rot->get<double>()) > 1e-9)) {
          throw SchemaError(vpath + ".rotation", "rotated rectangles are not supported");
        }
        const json& labels = require(value, "rectanglelabels", vpath);
        if (!labels.is_array() || labels.size() != 1 || !labels[0].is_string()) {
          throw SchemaError(vpath + ".rectanglelabels", "expected exactly one label");
        }
        const ClassLabel label = classes.by_name(labels[0].get<std::string>());
        const double x1 = x * w / 100.0;
        const double y1 = y * h / 100.0;
        const BBox raw(x1, y1, x1 + bw * w / 100.0, y1 + bh * h / 100.0);
        page.annotations.push_back({clamp_to_image(raw, w, h), label});
      }
    }
    if (width == 0) {
      // No results to carry the size: fall back to task- or data-level fields.
      const json* holder = task.contains("original_width") ? &task
                           : data.contains("original_width") ? &data
                                                             : nullptr;
      if (!holder) throw SchemaError(tpath + ".original_width", "image size unknown for task");
      const std::string hpath = holder == &task ? tpath : tpath + ".data";
      width = positive_int_field(*holder, "original_width", hpath, 0);
      height = positive_int_field(*holder, "original_height", hpath, 0);
    }
    page.image_width = static_cast<int>(width);
    page.image_height = static_cast<int>(height);
    ds.pages.push_back(std::move(page));
  }
  sort_and_check_unique(ds.pages);
  return ds;
}

PageRecord parse_page_line(std::string_view line, std::size_t line_no) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    throw SchemaError("$", std::string("invalid JSON: ") + e.what(), line_no);
  }
  if (!obj.is_object()) throw SchemaError("$", "expected an object", line_no);
  reject_unknown_keys(obj, {"page_id", "image_width", "image_height", "annotations", "detections"},
                      "$", line_no);

  PageRecord page;
  const auto& id = require(obj, "page_id", "$", line_no);
  if (!id.is_string() || id.get<std::string>().empty()) {
    throw SchemaError("$.page_id", "expected a non-empty string", line_no);
  }
  page.page_id = id.get<std::string>();
  page.image_width = positive_int_field(obj, "image_width", "$", line_no);
  page.image_height = positive_int_field(obj, "image_height", "$", line_no);
  const double w = page.image_width, h = page.image_height;

  if (const auto it = obj.find("annotations"); it != obj.end()) {
    if (!it->is_array()) throw SchemaError("$.annotations", "expected an array", line_no);
    for (std::size_t i = 0; i < it->size(); ++i) {
      const auto path = "$.annotations[" + std::to_string(i) + "]";
      const json& a = (*it)[i];
      if (!a.is_object()) throw SchemaError(path, "expected an object", line_no);
      reject_unknown_keys(a, {"bbox", "class"}, path, line_no);
      const BBox b = bbox_from_json(require(a, "bbox", path, line_no), path + ".bbox", line_no);
      page.annotations.push_back({clamp_to_image(b, w, h), class_field(a, path, line_no)});
    }
  }
  if (const auto it = obj.find("detections"); it != obj.end()) {
    if (!it->is_array()) throw SchemaError("$.detections", "expected an array", line_no);
    for (std::size_t i = 0; i < it->size(); ++i) {
      const auto path = "$.detections[" + std::to_string(i) + "]";
      const json& d = (*it)[i];
      if (!d.is_object()) throw SchemaError(path, "expected an object", line_no);
      reject_unknown_keys(d, {"bbox", "class", "score"}, path, line_no);
      const BBox b = bbox_from_json(require(d, "bbox", path, line_no), path + ".bbox", line_no);
      const double score = require_number(d, "score", path, line_no);
      if (score < 0 || score > 1) throw SchemaError(path + ".score", "outside [0,1]", line_no);
      page.detections.emplace_back(clamp_to_image(b, w, h), class_field(d, path, line_no), score);
    }
  }
  return page;
}

std::string format_page_line(const PageRecord& page) {
  ordered_json obj;
  obj["page_id"] = page.page_id;
  obj["image_width"] = page.image_width;
  obj["image_height"] = page.image_height;
  obj["annotations"] = ordered_json::array();
  for (const auto& a : page.annotations) {
    obj["annotations"].push_back(
        {{"bbox", {a.bbox.x1(), a.bbox.y1(), a.bbox.x2(), a.bbox.y2()}},
         {"class", std::string(name_of(a.label))}});
  }
  obj["detections"] = ordered_json::array();
  for (const auto& d : page.detections) {
    obj["detections"].push_back(
        {{"bbox", {d.bbox.x1(), d.bbox.y1(), d.bbox.x2(), d.bbox.y2()}},
         {"class", std::string(name_of(d.label))},
         {"score", d.score}});
  }
  return obj.dump();
}

Dataset read_pages_jsonl(std::string_view text) {
  Dataset ds;
  ds.class_names = canonical_class_names();
  std::set<std::string> seen;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    PageRecord page = parse_page_line(line, line_no);
    if (!seen.insert(page.page_id).second) throw DuplicatePage(page.page_id);
    ds.pages.push_back(std::move(page));
  });
  return ds;
}

std::string write_pages_jsonl(const Dataset& dataset) {
  std::string out;
  for (const auto& page : dataset.pages) {
    out += format_page_line(page);
    out += '\n';
  }
  return out;
}

void check_page_id_is_filename(const std::string& page_id) {
  if (page_id.empty() || page_id == "." || page_id == ".." ||
      page_id.find_first_of("/\\") != std::string::npos || page_id.find('\0') != std::string::npos) {
    throw Error("page_id '" + page_id + "' cannot be used as a file name");
  }
}

Dataset read_yolo_dataset(const fs::path& dir, const ClassMap& classes,
                          std::optional<std::pair<int, int>> default_size) {
  const fs::path labels_dir = dir / "labels";
  if (!fs::is_directory(labels_dir)) {
    throw Error("'" + labels_dir.string() + "' is not a directory");
  }

  std::map<std::string, std::pair<int, int>> sizes;
  if (const auto tsv = dir / "pages.tsv"; fs::exists(tsv)) {
    for_each_line(read_file(tsv), [&](std::size_t line_no, std::string_view line) {
      std::vector<std::string_view> f;
      std::size_t pos = 0;
      const auto t = trim(line);
      while (true) {
        const auto tab = t.find('\t', pos);
        f.push_back(t.substr(pos, tab == std::string_view::npos ? tab : tab - pos));
        if (tab == std::string_view::npos) break;
        pos = tab + 1;
      }
      const auto w = f.size() == 3 ? to_long(f[1]) : std::nullopt;
      const auto h = f.size() == 3 ? to_long(f[2]) : std::nullopt;
      if (!w || !h || *w <= 0 || *h <= 0) {
        throw MalformedLine(line_no, "pages.tsv expects page_id<TAB>width<TAB>height");
      }
      sizes[std::string(f[0])] = {static_cast<int>(*w), static_cast<int>(*h)};
    });
  }

  Dataset ds;
  ds.class_names = classes.names();
  for (const auto& entry : fs::directory_iterator(labels_dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    PageRecord page;
    page.page_id = entry.path().stem().string();
    std::pair<int, int> size;
    if (const auto it = sizes.find(page.page_id); it != sizes.end()) {
      size = it->second;
    } else if (default_size) {
      size = *default_size;
    } else {
      throw Error("no image size for page '" + page.page_id +
                  "' (add it to pages.tsv or pass a default size)");
    }
    page.image_width = size.first;
    page.image_height = size.second;
    auto with_file = [&](const fs::path& p, auto&& parse) {
      try {
        parse(read_file(p));
      } catch (const MalformedLine& e) {
        throw Error(p.string() + ": " + e.what());
      } catch (const OutOfRange& e) {
        throw Error(p.string() + ": " + e.what());
      }
    };
    with_file(entry.path(), [&](const std::string& text) {
      page.annotations = parse_yolo_annotations(text, size.first, size.second, classes);
    });
    if (const auto det = dir / "detections" / entry.path().filename(); fs::exists(det)) {
      with_file(det, [&](const std::string& text) {
        page.detections = parse_yolo_detections(text, size.first, size.second, classes);
      });
    }
    ds.pages.push_back(std::move(page));
  }
  sort_and_check_unique(ds.pages);
  return ds;
}

void write_yolo_dataset(const Dataset& dataset, const fs::path& dir) {
  std::string tsv;
  for (const auto& page : dataset.pages) {
    check_page_id_is_filename(page.page_id);
    const auto file = page.page_id + ".txt";
    write_file_atomic(dir / "labels" / file,
                      emit_yolo_labels(std::span<const Annotation>(page.annotations),
                                       page.image_width, page.image_height));
    write_file_atomic(dir / "detections" / file,
                      emit_yolo_labels(std::span<const Detection>(page.detections),
                                       page.image_width, page.image_height));
    tsv += fmt::format("{}\t{}\t{}\n", page.page_id, page.image_width, page.image_height);
  }
  write_file_atomic(dir / "pages.tsv", tsv);
  std::string names;
  for (const auto& n : canonical_class_names()) names += n + "\n";
  write_file_atomic(dir / "classes.txt", names);
}

}  // namespace doclayout
