// doclayout: command-line front end for conversion, post-processing,
// evaluation, assembly and extraction of document layout detections.
//
// Exit codes: 0 success, 1 input or backend error, 2 nothing to evaluate.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "doclayout/assembly.hpp"
#include "doclayout/errors.hpp"
#include "doclayout/formats.hpp"
#include "doclayout/io.hpp"
#include "doclayout/metrics.hpp"
#include "doclayout/pipeline.hpp"
#include "doclayout/postprocess.hpp"
#include "doclayout/subprocess.hpp"

namespace fs = std::filesystem;
using namespace doclayout;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNoGroundTruth = 2;

// Config file keys that differ from their flag spelling.
const std::map<std::string, std::string> kConfigAliases = {
    {"nms_iou_threshold", "nms-iou"},
    {"max_detections_per_page", "max-det"},
    {"iou_threshold", "iou"},
    {"parallelism", "jobs"},
};

struct PostprocessFlags {
  PostprocessConfig cfg;
  void add(CLI::App* sub) {
    sub->add_option("--score-threshold", cfg.score_threshold, "Minimum detection score")
        ->check(CLI::Range(0.0, 1.0));
    sub->add_option("--nms-iou", cfg.nms_iou_threshold, "NMS IoU threshold")
        ->check(CLI::Range(0.0, 1.0));
    sub->add_flag("--class-agnostic", cfg.class_agnostic, "Suppress across classes");
    sub->add_option("--max-det", cfg.max_detections_per_page, "Detections kept per page")
        ->check(CLI::PositiveNumber);
  }
};

std::pair<int, int> parse_size(const std::string& s) {
  const auto x = s.find_first_of("xX");
  if (x == std::string::npos) throw Error("image size must look like WIDTHxHEIGHT");
  const int w = std::stoi(s.substr(0, x));
  const int h = std::stoi(s.substr(x + 1));
  if (w <= 0 || h <= 0) throw Error("image size must be positive");
  return {w, h};
}

ClassMap load_class_map(const std::string& names_file) {
  return names_file.empty() ? ClassMap() : ClassMap::from_names_file(read_file(names_file));
}

// --backend CLASS[,CLASS...]=COMMAND, where COMMAND may be "skip".
ExtractionRoutes parse_backends(const std::vector<std::string>& specs,
                                std::chrono::milliseconds timeout) {
  std::map<ClassLabel, std::string> by_class;  // later specs win
  for (const auto& spec : specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
      throw Error("--backend expects CLASS=COMMAND, got '" + spec + "'");
    }
    std::string classes = spec.substr(0, eq);
    std::size_t pos = 0;
    while (pos <= classes.size()) {
      const auto comma = classes.find(',', pos);
      const auto name = classes.substr(pos, comma == std::string::npos ? comma : comma - pos);
      by_class[class_from_name(name)] = spec.substr(eq + 1);
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
  }
  ExtractionRoutes routes;
  std::map<std::string, std::size_t> by_command;
  for (const auto& [label, command] : by_class) {
    if (command == "skip") {
      routes.skip.insert(label);
      continue;
    }
    if (command == "crop") {
      if (label != ClassLabel::kImage) throw Error("only images can use the crop route");
      continue;
    }
    auto it = by_command.find(command);
    if (it == by_command.end()) {
      BackendSpec b;
      b.command = split_command(command);
      if (b.command.empty()) throw Error("empty backend command");
      b.name = fs::path(b.command.front()).filename().string();
      b.timeout = timeout;
      it = by_command.emplace(command, routes.backends.size()).first;
      routes.backends.push_back(std::move(b));
    }
    routes.backends[it->second].classes.insert(label);
  }
  routes.validate();
  return routes;
}

// Translates `key = value` lines of a config file into flags for `sub`.
// Keys unknown to the subcommand are ignored; keys unknown to every
// subcommand are an error.
std::vector<std::string> config_args(const std::string& path, CLI::App& app, CLI::App* sub) {
  std::vector<std::string> args;
  const std::string text = read_file(path);
  std::size_t line_no = 0, pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#' || line[first] == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(fmt::format("{}:{}: expected key = value", path, line_no));
    }
    auto strip = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r\"");
      const auto b = s.find_last_not_of(" \t\r\"");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    std::string flag;
    if (key.rfind("backend.", 0) == 0) {
      args.push_back("--backend");
      args.push_back(key.substr(8) + "=" + value);
      if (!sub->get_option_no_throw("--backend")) args.resize(args.size() - 2);
      continue;
    }
    if (const auto alias = kConfigAliases.find(key); alias != kConfigAliases.end()) {
      flag = alias->second;
    } else {
      flag = key;
      std::replace(flag.begin(), flag.end(), '_', '-');
    }
    bool known = false;
    for (const auto* s : app.get_subcommands({})) known |= s->get_option_no_throw("--" + flag) != nullptr;
    if (!known) throw Error(fmt::format("{}:{}: unknown config key '{}'", path, line_no, key));
    const auto* opt = sub->get_option_no_throw("--" + flag);
    if (!opt) continue;
    if (opt->get_type_size() == 0) {
      if (value == "true" || value == "1" || value == "yes") args.push_back("--" + flag);
    } else {
      args.push_back("--" + flag);
      args.push_back(value);
    }
  }
  return args;
}

int cmd_convert(const std::string& from, const std::string& to, const std::string& in,
                const std::string& out, const std::string& names, const std::string& size) {
  const ClassMap classes = load_class_map(names);
  Dataset ds;
  if (from == "label-studio") {
    ds = parse_label_studio(read_file(in), classes);
  } else if (from == "jsonl") {
    ds = read_pages_jsonl(read_file(in));
  } else {
    std::optional<std::pair<int, int>> def;
    if (!size.empty()) def = parse_size(size);
    ds = read_yolo_dataset(in, classes, def);
  }
  for (const auto& p : ds.pages) validate_page(p);
  if (to == "jsonl") {
    write_file_atomic(out, write_pages_jsonl(ds));
  } else {
    write_yolo_dataset(ds, out);
  }
  std::cout << fmt::format("converted {} pages ({} -> {})\n", ds.pages.size(), from, to);
  return kExitOk;
}

int cmd_postprocess(const std::string& in, const std::string& out, const PostprocessConfig& cfg) {
  Dataset ds = read_pages_jsonl(read_file(in));
  std::size_t before = 0, after = 0;
  for (auto& page : ds.pages) {
    before += page.detections.size();
    page.detections = postprocess(page.detections, cfg);
    after += page.detections.size();
  }
  write_file_atomic(out, write_pages_jsonl(ds));
  std::cout << fmt::format("kept {} of {} detections over {} pages\n", after, before,
                           ds.pages.size());
  return kExitOk;
}

int cmd_evaluate(const std::string& in, const std::string& dets, const std::string& out,
                 const std::string& text_out, const EvalConfig& cfg) {
  Dataset ds = read_pages_jsonl(read_file(in));
  std::vector<PageRecord> pages = std::move(ds.pages);
  if (!dets.empty()) {
    const Dataset det_ds = read_pages_jsonl(read_file(dets));
    pages = join_detections(pages, det_ds.pages);
  }
  const EvalReport report = evaluate(pages, cfg);
  if (!out.empty()) write_file_atomic(out, render_report_json(report));
  if (!text_out.empty()) write_file_atomic(text_out, render_report_text(report));
  std::cout << render_summary_line(report) << "\n";
  return kExitOk;
}

int cmd_assemble(const std::string& in, const std::string& out_dir, const AssemblyConfig& cfg) {
  const Dataset ds = read_pages_jsonl(read_file(in));
  for (const auto& page : ds.pages) {
    check_page_id_is_filename(page.page_id);
    const auto layout =
        assemble_page(page.page_id, page.image_width, page.image_height, page.detections, cfg);
    write_file_atomic(fs::path(out_dir) / (page.page_id + ".json"), emit_layout_json(layout));
  }
  std::cout << fmt::format("assembled {} pages\n", ds.pages.size());
  return kExitOk;
}

struct ExtractArgs {
  std::string pages_file;
  std::string images_dir;
  std::string detections_dir;
  std::string detector_cmd;
  std::vector<std::string> backends;
  std::string out_dir;
  std::string names;
  double timeout_s = 30.0;
  unsigned jobs = 1;
  unsigned call_jobs = 1;
  bool strict = false;
};

int cmd_extract(const ExtractArgs& args, PipelineConfig cfg) {
  if (!args.detections_dir.empty() && !args.detector_cmd.empty()) {
    throw Error("--detections-dir and --detector-cmd are mutually exclusive");
  }
  const auto timeout = std::chrono::milliseconds(static_cast<long long>(args.timeout_s * 1000));
  cfg.classes = load_class_map(args.names);
  cfg.routes = parse_backends(args.backends, timeout);
  cfg.extraction.output_dir = args.out_dir;
  cfg.extraction.parallelism = args.call_jobs;
  if (!args.detections_dir.empty()) {
    cfg.detector = FilesDetector{args.detections_dir};
  } else if (!args.detector_cmd.empty()) {
    cfg.detector = CommandDetector{split_command(args.detector_cmd), timeout};
  } else if (args.pages_file.empty()) {
    throw Error("no detections: pass --pages with detections, --detections-dir or --detector-cmd");
  }

  std::vector<PageInput> inputs;
  if (!args.pages_file.empty()) {
    for (auto& page : read_pages_jsonl(read_file(args.pages_file)).pages) {
      PageInput in;
      if (auto img = find_page_image(args.images_dir, page.page_id)) in.image_path = *img;
      else in.image_path = fs::path(args.images_dir) / (page.page_id + ".png");
      in.page = std::move(page);
      inputs.push_back(std::move(in));
    }
  } else {
    inputs = pages_from_image_dir(args.images_dir);
  }
  for (const auto& in : inputs) check_page_id_is_filename(in.page.page_id);
  fs::create_directories(args.out_dir);

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> failed_pages{0}, failed_calls{0}, processed{0};
  std::atomic<bool> abort{false};
  std::mutex log_mu;
  const auto start = std::chrono::steady_clock::now();
  auto worker = [&] {
    for (std::size_t i = next++; i < inputs.size() && !abort; i = next++) {
      const auto& in = inputs[i];
      try {
        const PageOutcome outcome = process_page(in, cfg);
        failed_calls += outcome.failed_calls;
        if (outcome.failed_calls > 0) {
          std::lock_guard lock(log_mu);
          spdlog::warn("page '{}': {} of {} extraction calls failed", in.page.page_id,
                       outcome.failed_calls, outcome.calls);
          if (args.strict) {
            abort = true;
            ++failed_pages;
            continue;
          }
        }
        write_file_atomic(fs::path(args.out_dir) / (in.page.page_id + ".json"),
                          emit_layout_json(outcome.layout));
        spdlog::debug("page '{}': {} calls, {:.4f} s extraction, {:.4f} s total", in.page.page_id,
                      outcome.calls, outcome.extraction_s, outcome.elapsed_s);
        ++processed;
      } catch (const std::exception& e) {
        ++failed_pages;
        std::lock_guard lock(log_mu);
        spdlog::error("page '{}': {}", in.page.page_id, e.what());
        if (args.strict) abort = true;
      }
    }
  };
  {
    const unsigned n = std::max(1u, std::min<unsigned>(args.jobs, static_cast<unsigned>(inputs.size())));
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < n; ++w) pool.emplace_back(worker);
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const std::size_t total = inputs.size();
  std::cout << fmt::format("pages: {} processed, {} failed, {} component errors\n",
                           processed.load(), failed_pages.load(), failed_calls.load());
  if (total > 0 && wall > 0) {
    std::cout << fmt::format("timing: {:.4f} s/page, {:.2f} pages/s ({} pages in {:.3f} s)\n",
                             wall / static_cast<double>(total), static_cast<double>(total) / wall,
                             total, wall);
  }
  if (args.strict && (failed_pages > 0 || failed_calls > 0)) return kExitError;
  return kExitOk;
}

int cmd_report(const std::string& in, const std::string& out) {
  const EvalReport report = parse_report_json(read_file(in));
  const std::string text = render_report_text(report);
  if (out.empty()) std::cout << text;
  else write_file_atomic(out, text);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("doclayout"));
  spdlog::set_pattern("%^%l%$: %v");

  CLI::App app{"Document layout detection toolkit: convert, evaluate, assemble and extract", "doclayout"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  int verbosity = 0;
  bool quiet = false;

  std::string config_path;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value file; command-line flags take precedence");
    sub->add_flag("-v,--verbose", verbosity, "More logging");
    sub->add_flag("-q,--quiet", quiet, "Errors only");
  };

  // convert
  std::string from, to, in, out, names, image_size;
  auto* convert = app.add_subcommand("convert", "Convert between label formats");
  convert->add_option("--from", from, "Input format")
      ->required()
      ->check(CLI::IsMember({"label-studio", "jsonl", "yolo"}));
  convert->add_option("--to", to, "Output format")->required()->check(CLI::IsMember({"jsonl", "yolo"}));
  convert->add_option("--in", in, "Input file or YOLO dataset directory")->required();
  convert->add_option("--out", out, "Output file or YOLO dataset directory")->required();
  convert->add_option("--names", names, "Class names file for remapping");
  convert->add_option("--image-size", image_size, "WIDTHxHEIGHT for YOLO input without pages.tsv");
  common(convert);

  // postprocess
  PostprocessFlags pp;
  auto* post = app.add_subcommand("postprocess", "Score filtering and NMS on page detections");
  post->add_option("--in", in, "Pages JSONL")->required();
  post->add_option("--out", out, "Output pages JSONL")->required();
  pp.add(post);
  common(post);

  // evaluate
  EvalConfig eval_cfg;
  std::string dets_file, text_out;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Precision, recall, F1, mAP50, mAP50-95");
  evaluate_cmd->add_option("--in", in, "Pages JSONL with annotations (and detections)")->required();
  evaluate_cmd->add_option("--detections", dets_file, "Separate pages JSONL with detections");
  evaluate_cmd->add_option("--out", out, "Report JSON path");
  evaluate_cmd->add_option("--text", text_out, "Plain-text report path");
  evaluate_cmd->add_option("--iou", eval_cfg.iou_threshold, "IoU for precision/recall")
      ->check(CLI::Range(0.0, 1.0));
  evaluate_cmd->add_option("--score-threshold", eval_cfg.score_threshold, "Operating score threshold")
      ->check(CLI::Range(0.0, 1.0));
  evaluate_cmd->add_option("--empty-precision", eval_cfg.empty_precision, "Precision when 0/0")
      ->check(CLI::Range(0.0, 1.0));
  evaluate_cmd->add_option("--empty-recall", eval_cfg.empty_recall, "Recall when 0/0")
      ->check(CLI::Range(0.0, 1.0));
  evaluate_cmd->add_option("--jobs", eval_cfg.jobs, "Worker threads")->check(CLI::PositiveNumber);
  common(evaluate_cmd);

  // assemble
  AssemblyConfig asm_cfg;
  auto add_assembly = [&](CLI::App* sub) {
    sub->add_option("--child-coverage", asm_cfg.child_coverage, "Group membership coverage")
        ->check(CLI::Range(0.0, 1.0));
    sub->add_option("--column-overlap", asm_cfg.order.column_overlap, "Same-column overlap")
        ->check(CLI::Range(0.0, 1.0));
    sub->add_option("--column-gap", asm_cfg.order.column_gap, "Column gap (page fraction)")
        ->check(CLI::Range(0.0, 1.0));
    sub->add_option("--spanning-width", asm_cfg.order.spanning_width, "Spanning box width")
        ->check(CLI::Range(0.0, 1.0));
  };
  auto* assemble = app.add_subcommand("assemble", "Group and order detections into layout JSON");
  assemble->add_option("--in", in, "Pages JSONL with final detections")->required();
  assemble->add_option("--out", out, "Output directory")->required();
  add_assembly(assemble);
  common(assemble);

  // extract
  ExtractArgs ex;
  PipelineConfig pipe;
  auto* extract = app.add_subcommand("extract", "Detect, assemble and extract page content");
  extract->add_option("--pages", ex.pages_file, "Pages JSONL (ids, sizes, optional detections)");
  extract->add_option("--images-dir", ex.images_dir, "Directory of page images")->required();
  extract->add_option("--detections-dir", ex.detections_dir, "YOLO-with-scores sidecar directory");
  extract->add_option("--detector-cmd", ex.detector_cmd, "Detector command, run with the image path");
  extract->add_option("--backend", ex.backends, "CLASS[,CLASS]=COMMAND (or =skip)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  extract->add_option("--out", ex.out_dir, "Output directory")->required();
  extract->add_option("--names", ex.names, "Class names file for detector labels");
  extract->add_option("--timeout", ex.timeout_s, "Seconds per backend/detector call")
      ->check(CLI::PositiveNumber);
  extract->add_option("--jobs", ex.jobs, "Pages processed in parallel")->check(CLI::PositiveNumber);
  extract->add_option("--call-jobs", ex.call_jobs, "Concurrent backend calls per page")
      ->check(CLI::PositiveNumber);
  extract->add_option("--pad", pipe.extraction.pad, "Crop padding in pixels")->check(CLI::NonNegativeNumber);
  extract->add_flag("--strict", ex.strict, "Fail on any page or backend error");
  PostprocessFlags ex_pp;
  ex_pp.add(extract);
  add_assembly(extract);
  common(extract);

  // report
  auto* report = app.add_subcommand("report", "Render a report JSON as the Metric/Value table");
  report->add_option("--in", in, "Report JSON")->required();
  report->add_option("--out", out, "Text output path (default stdout)");
  common(report);

  // Splice config-file flags in front of the user's flags so the latter win.
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    CLI::App* sub = nullptr;
    std::size_t sub_pos = 0;
    for (; sub_pos < args.size(); ++sub_pos) {
      if (args[sub_pos].rfind("-", 0) == 0) continue;
      sub = app.get_subcommand_no_throw(args[sub_pos]);
      break;
    }
    if (sub) {
      for (std::size_t i = sub_pos + 1; i < args.size(); ++i) {
        std::string cfg_path;
        if (args[i] == "--config" && i + 1 < args.size()) cfg_path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) cfg_path = args[i].substr(9);
        if (cfg_path.empty()) continue;
        const auto extra = config_args(cfg_path, app, sub);
        args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub_pos) + 1, extra.begin(), extra.end());
        break;
      }
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitError;
  }

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  if (quiet) spdlog::set_level(spdlog::level::err);
  else if (verbosity > 0) spdlog::set_level(spdlog::level::debug);

  try {
    if (*convert) return cmd_convert(from, to, in, out, names, image_size);
    if (*post) return cmd_postprocess(in, out, pp.cfg);
    if (*evaluate_cmd) return cmd_evaluate(in, dets_file, out, text_out, eval_cfg);
    if (*assemble) return cmd_assemble(in, out, asm_cfg);
    if (*extract) {
      pipe.postprocess = ex_pp.cfg;
      pipe.postprocess.validate();
      pipe.assembly = asm_cfg;
      return cmd_extract(ex, pipe);
    }
    if (*report) return cmd_report(in, out);
  } catch (const NoGroundTruth& e) {
    spdlog::error("{}", e.what());
    return kExitNoGroundTruth;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitError;
  }
  return kExitError;
}
