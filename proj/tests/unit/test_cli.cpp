#include <doctest.h>

#include <fstream>

#include <nlohmann/json.hpp>

#include "../cli_support.hpp"
#include "../oracles.hpp"
#include "doclayout/assembly.hpp"
#include "doclayout/formats.hpp"

using namespace cli_support;
using doclayout::read_file;

namespace {

std::string fixture(const std::string& name) { return std::string(DOCLAYOUT_FIXTURES) + "/" + name; }

void write(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

}  // namespace

TEST_CASE("help and unknown flags") {
  CHECK(run_cli({"--help"}).exit_code == 0);
  for (const std::string sub : {"convert", "postprocess", "evaluate", "assemble", "extract", "report"}) {
    CAPTURE(sub);
    const auto help = run_cli({sub, "--help"});
    CHECK(help.exit_code == 0);
    CHECK(help.out.find("--") != std::string::npos);
    CHECK(run_cli({sub, "--no-such-flag", "1"}).exit_code == 1);
  }
  CHECK(run_cli({}).exit_code == 1);
  CHECK(run_cli({"frobnicate"}).exit_code == 1);
}

TEST_CASE("convert label studio to jsonl") {
  const fs::path dir = fresh_dir("convert_ls");
  const auto r = run_cli({"convert", "--from", "label-studio", "--to", "jsonl", "--in",
                          fixture("label_studio_3tasks.json"), "--out", (dir / "pages.jsonl").string()});
  CHECK(r.exit_code == 0);
  const auto ds = doclayout::read_pages_jsonl(read_file(dir / "pages.jsonl"));
  CHECK(ds.pages.size() == 3);

  write(dir / "broken.json", "[{\"data\": ");
  const auto bad = run_cli({"convert", "--from", "label-studio", "--to", "jsonl", "--in",
                            (dir / "broken.json").string(), "--out", (dir / "x.jsonl").string()});
  CHECK(bad.exit_code == 1);
  CHECK(bad.err_tail.find("$") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "x.jsonl"));
  fs::remove_all(dir);
}

TEST_CASE("yolo to jsonl to yolo keeps boxes") {
  const fs::path dir = fresh_dir("convert_yolo");
  std::mt19937 rng(5);
  doclayout::Dataset ds;
  for (int i = 0; i < 5; ++i) {
    oracle::PageGen gen;
    gen.max_classes = 7;
    ds.pages.push_back(oracle::random_page(rng, "y" + std::to_string(i), 6, 4, gen));
  }
  ds.class_names = doclayout::canonical_class_names();
  doclayout::write_yolo_dataset(ds, dir / "a");
  CHECK(run_cli({"convert", "--from", "yolo", "--to", "jsonl", "--in", (dir / "a").string(), "--out",
                 (dir / "p.jsonl").string()})
            .exit_code == 0);
  CHECK(run_cli({"convert", "--from", "jsonl", "--to", "yolo", "--in", (dir / "p.jsonl").string(),
                 "--out", (dir / "b").string()})
            .exit_code == 0);
  const auto back = doclayout::read_yolo_dataset(dir / "b");
  REQUIRE(back.pages.size() == ds.pages.size());
  for (std::size_t i = 0; i < ds.pages.size(); ++i) {
    REQUIRE(back.pages[i].annotations.size() == ds.pages[i].annotations.size());
    for (std::size_t k = 0; k < ds.pages[i].annotations.size(); ++k) {
      const auto& a = ds.pages[i].annotations[k];
      const auto& b = back.pages[i].annotations[k];
      CHECK(a.label == b.label);
      CHECK(std::abs(a.bbox.x1() - b.bbox.x1()) < 1e-3);
      CHECK(std::abs(a.bbox.y2() - b.bbox.y2()) < 1e-3);
    }
  }
  CHECK(run_cli({"convert", "--from", "yolo", "--to", "jsonl", "--in", (dir / "missing").string(),
                 "--out", (dir / "q.jsonl").string()})
            .exit_code == 1);
  fs::remove_all(dir);
}

TEST_CASE("evaluate matches the hand-built oracle fixture") {
  const fs::path dir = fresh_dir("evaluate");
  const auto r = run_cli({"evaluate", "--in", fixture("eval_oracle.jsonl"), "--out",
                          (dir / "report.json").string(), "--text", (dir / "report.txt").string()});
  REQUIRE(r.exit_code == 0);
  // per-class TP/FP sequences by descending score, fixed by construction
  const double text_ap = oracle::envelope_101({true, false, true, true, false}, 4);
  const double title_ap = oracle::envelope_101({true, true}, 2);
  const double table_ap = oracle::envelope_101({true, false}, 1);
  const double expected = (text_ap + title_ap + table_ap) / 3.0;
  CHECK(expected == doctest::Approx(0.876238).epsilon(1e-6));
  const auto report = nlohmann::json::parse(read_file(dir / "report.json"));
  CHECK(std::abs(report["aggregate"]["ap50"].get<double>() - expected) < 0.01);
  CHECK(r.out.find("mAP50 0.8762") != std::string::npos);
  CHECK(read_file(dir / "report.txt").rfind("Metric    Value\n", 0) == 0);
  fs::remove_all(dir);
}

TEST_CASE("evaluate exit codes") {
  const fs::path dir = fresh_dir("evaluate_codes");
  write(dir / "empty.jsonl",
        R"({"page_id":"a","image_width":10,"image_height":10,"annotations":[],"detections":[{"bbox":[0,0,5,5],"class":"text","score":0.9}]})"
        "\n");
  CHECK(run_cli({"evaluate", "--in", (dir / "empty.jsonl").string()}).exit_code == 2);
  CHECK(run_cli({"evaluate", "--in", (dir / "nope.jsonl").string()}).exit_code == 1);
  CHECK(run_cli({"evaluate", "--in", fixture("eval_oracle.jsonl"), "--iou", "1.5"}).exit_code == 1);

  write(dir / "perfect.jsonl",
        R"({"page_id":"a","image_width":100,"image_height":100,"annotations":[{"bbox":[0,0,50,50],"class":"text"}],"detections":[{"bbox":[0,0,50,50],"class":"text","score":1.0}]})"
        "\n");
  const auto r = run_cli({"evaluate", "--in", (dir / "perfect.jsonl").string()});
  CHECK(r.exit_code == 0);
  CHECK(r.out == "mAP50 1.0000 mAP50-95 1.0000 P 1.0000 R 1.0000 F1 1.0000\n");
  fs::remove_all(dir);
}

TEST_CASE("config file values yield to flags") {
  const fs::path dir = fresh_dir("config");
  write(dir / "in.jsonl",
        R"({"page_id":"a","image_width":100,"image_height":100,"annotations":[],"detections":[{"bbox":[0,0,50,50],"class":"text","score":0.9},{"bbox":[0,0,50,48],"class":"text","score":0.8},{"bbox":[60,60,90,90],"class":"text","score":0.3}]})"
        "\n");
  write(dir / "strict.conf", "# thresholds\nscore_threshold = 0.5\nnms_iou_threshold = 0.45\n");
  auto count = [&](const fs::path& p) {
    return doclayout::read_pages_jsonl(read_file(p)).pages[0].detections.size();
  };
  CHECK(run_cli({"postprocess", "--config", (dir / "strict.conf").string(), "--in",
                 (dir / "in.jsonl").string(), "--out", (dir / "a.jsonl").string()})
            .exit_code == 0);
  CHECK(count(dir / "a.jsonl") == 1);
  CHECK(run_cli({"postprocess", "--config", (dir / "strict.conf").string(), "--score-threshold", "0.1",
                 "--in", (dir / "in.jsonl").string(), "--out", (dir / "b.jsonl").string()})
            .exit_code == 0);
  CHECK(count(dir / "b.jsonl") == 2);
  write(dir / "bad.conf", "no_such_key = 3\n");
  CHECK(run_cli({"postprocess", "--config", (dir / "bad.conf").string(), "--in",
                 (dir / "in.jsonl").string(), "--out", (dir / "c.jsonl").string()})
            .exit_code == 1);
  fs::remove_all(dir);
}

TEST_CASE("assemble and report") {
  const fs::path dir = fresh_dir("assemble");
  write(dir / "in.jsonl",
        R"({"page_id":"p1","image_width":500,"image_height":500,"annotations":[],"detections":[{"bbox":[50,150,450,350],"class":"table","score":0.95},{"bbox":[20.5,420.25,480,490],"class":"text","score":0.7},{"bbox":[0,100,500,400],"class":"table_caption","score":0.9},{"bbox":[50,110,450,140],"class":"caption","score":0.8}]})"
        "\n");
  CHECK(run_cli({"assemble", "--in", (dir / "in.jsonl").string(), "--out", (dir / "out").string()})
            .exit_code == 0);
  CHECK(read_file(dir / "out" / "p1.json") == read_file(fixture("layout_table_group.json")));

  const auto r = run_cli({"report", "--in", fixture("report_summary.json")});
  CHECK(r.exit_code == 0);
  CHECK(r.out == read_file(fixture("report_summary.txt")));
  CHECK(run_cli({"report", "--in", fixture("label_studio_3tasks.json")}).exit_code == 1);
  fs::remove_all(dir);
}

TEST_CASE("extract with mock detector and backends") {
  const fs::path dir = fresh_dir("extract");
  write_synthetic_pages(dir / "images", 3);
  const auto r = run_cli(mock_extract_args(dir / "images", dir / "out"));
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("pages: 3 processed, 0 failed, 0 component errors") != std::string::npos);
  CHECK(r.out.find("s/page") != std::string::npos);
  CHECK(r.out.find("pages/s") != std::string::npos);
  for (const std::string id : {"page_001", "page_002", "page_003"}) {
    const auto layout = doclayout::parse_layout_json(read_file(dir / "out" / (id + ".json")));
    CHECK(layout.page_id == id);
    CHECK_FALSE(layout.components.empty());
    for (const auto& c : layout.components) CHECK_FALSE(c.error.has_value());
  }
  CHECK(fs::exists(dir / "out" / "crops"));
  const std::string first = json_outputs(dir / "out");
  fs::remove_all(dir / "out");
  REQUIRE(run_cli(mock_extract_args(dir / "images", dir / "out")).exit_code == 0);
  CHECK(json_outputs(dir / "out") == first);
  fs::remove_all(dir);
}

TEST_CASE("extract with a crashing backend") {
  const fs::path dir = fresh_dir("extract_crash");
  write_synthetic_pages(dir / "images", 1);
  auto args = mock_extract_args(dir / "images", dir / "out");
  args.push_back("--backend");
  args.push_back(mock_backend_flag("table", "--exit 9"));
  const auto r = run_cli(args);
  CHECK(r.exit_code == 0);
  const std::string page = read_file(dir / "out" / "page_001.json");
  CHECK(page.find("\"error\": \"crash: ") != std::string::npos);

  args.push_back("--strict");
  fs::remove_all(dir / "out");
  CHECK(run_cli(args).exit_code == 1);
  fs::remove_all(dir);
}

TEST_CASE("extract from detection sidecars and page errors") {
  const fs::path dir = fresh_dir("extract_files");
  write_synthetic_pages(dir / "images", 2);
  fs::create_directories(dir / "dets");
  write(dir / "dets" / "page_001.txt", "1 0.5 0.2 0.8 0.1 0.9\n0 0.5 0.05 0.8 0.04 0.8\n");
  const auto r = run_cli({"extract", "--images-dir", (dir / "images").string(), "--detections-dir",
                          (dir / "dets").string(), "--backend", mock_backend_flag("title,text,caption"),
                          "--backend", "table=skip", "--out", (dir / "out").string(), "-q"});
  CHECK(r.exit_code == 0);
  const auto one = doclayout::parse_layout_json(read_file(dir / "out" / "page_001.json"));
  REQUIRE(one.components.size() == 2);
  CHECK(one.components[0].label == doclayout::ClassLabel::kTitle);
  CHECK(std::get<std::string>(one.components[1].data).rfind("MOCK:text:", 0) == 0);
  const auto two = doclayout::parse_layout_json(read_file(dir / "out" / "page_002.json"));
  CHECK(two.components.empty());

  // detector failure is a page-level error
  const auto failing = run_cli({"extract", "--images-dir", (dir / "images").string(), "--detector-cmd",
                                std::string(DOCLAYOUT_MOCK_DETECTOR) + " --fail", "--backend",
                                mock_backend_flag("title,text,caption,table"), "--out",
                                (dir / "out2").string(), "-q"});
  CHECK(failing.exit_code == 0);
  CHECK(failing.out.find("0 processed, 2 failed") != std::string::npos);
  // unrouted class is a configuration error
  const auto unrouted = run_cli({"extract", "--images-dir", (dir / "images").string(), "--detector-cmd",
                                 DOCLAYOUT_MOCK_DETECTOR, "--out", (dir / "out3").string(), "--strict", "-q"});
  CHECK(unrouted.exit_code == 1);
  fs::remove_all(dir);
}
