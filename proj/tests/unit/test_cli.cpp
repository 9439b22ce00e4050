#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "blv/pgm.hpp"
#include "commands.hpp"

using namespace blv;
using namespace blv::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("blv_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Json small_config() {
  return Json::parse(R"({
    "dataset": {"counts": [150, 40, 10], "stddev": 0.9},
    "noise": {"family": "gaussian", "sigma": 6},
    "train": {"mode": "blv", "epochs": 4, "batch_size": 32, "seeds": [1, 2]},
    "metrics": {"tail_classes": [2]}
  })");
}

std::string write_config(const fs::path& dir, const Json& doc) {
  const auto path = dir / "config.json";
  std::ofstream(path) << doc.dump(2);
  return path.string();
}

Json read_json(const fs::path& p) {
  std::ifstream in(p);
  return Json::parse(in);
}

std::string error_key(const Json& doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError& e) {
    return e.key_path();
  }
  return "";
}

}  // namespace

TEST_CASE("config validation names the offending key") {
  Json doc = small_config();
  doc["train"].erase("epochs");
  CHECK(error_key(doc) == "train.epochs");

  doc = small_config();
  doc["train"]["epoch"] = 3;
  CHECK(error_key(doc) == "train.epoch");

  doc = small_config();
  doc["bogus"] = 1;
  CHECK(error_key(doc) == "bogus");

  doc = small_config();
  doc["noise"]["family"] = "cauchy";
  CHECK(error_key(doc) == "noise.family");

  doc = small_config();
  doc["noise"]["family"] = "beta";
  doc["noise"]["alpha"] = 0;
  CHECK(error_key(doc) == "noise");

  doc = small_config();
  doc["metrics"]["tail_classes"] = {5};
  CHECK(error_key(doc) == "metrics.tail_classes[0]");

  doc = small_config();
  doc["dataset"].erase("counts");
  CHECK(error_key(doc) == "dataset.counts");

  doc = small_config();
  doc["train"]["epochs"] = "ten";
  CHECK(error_key(doc) == "train.epochs");
}

TEST_CASE("dotted overrides") {
  Json doc = small_config();
  apply_override(doc, "train.epochs=9");
  apply_override(doc, "noise.family=uniform");
  apply_override(doc, "schedule.schedule_mode=temporal");
  CHECK(doc["train"]["epochs"] == 9);
  CHECK(doc["noise"]["family"] == "uniform");
  const auto cfg = parse_config(doc);
  CHECK(cfg.train.epochs == 9);
  CHECK(cfg.train.noise.family == NoiseFamily::kUniform);
  CHECK_THROWS_AS(apply_override(doc, "novalue"), ConfigError);
}

TEST_CASE("resolved config echo round-trips") {
  Json doc = small_config();
  doc["schedule"]["schedule_mode"] = "temporal";
  const auto resolved = resolve(parse_config(doc), 11);
  CHECK(resolved.train.schedule.t_end == planned_iterations(resolved));
  const Json echo = to_json(resolved);
  CHECK(to_json(parse_config(echo)) == echo);
}

TEST_CASE("seed precedence") {
  auto cfg = parse_config(small_config());
  ::setenv("BLV_SEED", "41", 1);
  CHECK(resolve_seed(cfg, std::nullopt) == 41);
  CHECK(resolve_seed(cfg, 5) == 5);
  cfg.seed = 9;
  CHECK(resolve_seed(cfg, std::nullopt) == 9);
  ::unsetenv("BLV_SEED");
  cfg.seed.reset();
  CHECK(resolve_seed(cfg, std::nullopt) == 0);
}

TEST_CASE("freq command") {
  const auto dir = scratch("freq");
  LabelMap map{2, 2, 255, {0, 1, 1, 255}};
  write_label_map_file((dir / "a.pgm").string(), map);
  LabelMap other{3, 1, 255, {2, 0, 0}};
  write_label_map_file((dir / "b.pgm").string(), other);

  std::ostringstream out, err;
  FreqOptions opt;
  opt.files = {(dir / "a.pgm").string()};
  opt.num_classes = 2;
  opt.smoothing = 0.0;
  opt.out_dir = dir / "out";
  REQUIRE(cmd_freq(opt, out, err) == kExitOk);
  const Json j = read_json(dir / "out" / "freq.json");
  CHECK(j["counts"] == Json({1, 2}));
  CHECK(j["ignored"] == 1);
  CHECK(j["coefficients"][0].get<double>() == 1.0);
  CHECK(j["coefficients"][1].get<double>() == doctest::Approx(0.36907024642854256).epsilon(1e-12));
  CHECK(j["tail_ranking"] == Json({0, 1}));

  // Two maps: totals are the sum of the singles.
  std::ostringstream o2, e2, o3, e3;
  FreqOptions both = opt;
  both.out_dir.reset();
  both.num_classes = 3;
  both.files = {(dir / "a.pgm").string(), (dir / "b.pgm").string()};
  REQUIRE(cmd_freq(both, o2, e2) == kExitOk);
  const Json jb = Json::parse(o2.str());
  CHECK(jb["counts"] == Json({3, 2, 1}));
  CHECK(jb["ignored"] == 1);

  FreqOptions none = opt;
  none.files.clear();
  CHECK(cmd_freq(none, o3, e3) == kExitUsage);

  std::ofstream(dir / "bad.pgm", std::ios::binary) << "P5\n4 4\n255\n\x01\x02";
  std::ostringstream o4, e4;
  FreqOptions bad = opt;
  bad.files = {(dir / "bad.pgm").string()};
  CHECK(cmd_freq(bad, o4, e4) == kExitRunFailure);
  CHECK(e4.str().find("byte 13") != std::string::npos);
}

TEST_CASE("train command writes a schema-valid report") {
  const auto dir = scratch("train");
  const auto path = write_config(dir, small_config());
  std::ostringstream out, err;
  TrainOptions opt;
  opt.config_path = path;
  opt.out_dir = dir / "runs";
  opt.seed = 7;
  opt.plot = true;
  REQUIRE(cmd_train(opt, out, err) == kExitOk);

  fs::path run_dir;
  for (const auto& e : fs::directory_iterator(dir / "runs")) run_dir = e.path();
  CHECK(run_dir.filename().string().rfind("train-7-", 0) == 0);
  const Json report = read_json(run_dir / "report.json");
  CHECK(validate_run_report(report).empty());
  CHECK(report["seed"] == 7);
  CHECK(report["loss_curve"].size() == 4);
  CHECK(fs::exists(run_dir / "loss.svg"));
  CHECK(fs::exists(run_dir / "tail_miou.svg"));

  // Re-feeding the config echo reproduces the run.
  const auto echo_path = write_config(dir / "runs", report["config"]);
  TrainOptions again;
  again.config_path = echo_path;
  again.out_dir = dir / "again";
  std::ostringstream o2, e2;
  REQUIRE(cmd_train(again, o2, e2) == kExitOk);
  fs::path again_dir;
  for (const auto& e : fs::directory_iterator(dir / "again")) again_dir = e.path();
  CHECK(again_dir.filename() == run_dir.filename());
  Json r2 = read_json(again_dir / "report.json");
  Json r1 = report;
  r1.erase("wall_clock_seconds");
  r2.erase("wall_clock_seconds");
  CHECK(r1 == r2);
}

TEST_CASE("train command: noise-free blv matches plain-ce byte for byte") {
  const auto dir = scratch("train_ce");
  Json doc = small_config();
  doc["noise"]["family"] = "none";
  const auto path = write_config(dir, doc);
  auto curve_for = [&](const std::string& mode) {
    TrainOptions opt;
    opt.config_path = path;
    opt.out_dir = dir / mode;
    opt.seed = 3;
    opt.overrides = {"train.mode=" + mode};
    std::ostringstream out, err;
    REQUIRE(cmd_train(opt, out, err) == kExitOk);
    for (const auto& e : fs::directory_iterator(dir / mode)) {
      return read_json(e.path() / "report.json")["loss_curve"].dump();
    }
    return std::string();
  };
  CHECK(curve_for("plain-ce") == curve_for("blv"));
}

TEST_CASE("train command reports config errors with the key path") {
  const auto dir = scratch("train_bad");
  Json doc = small_config();
  doc["train"].erase("epochs");
  TrainOptions opt;
  opt.config_path = write_config(dir, doc);
  opt.out_dir = dir / "runs";
  std::ostringstream out, err;
  CHECK(cmd_train(opt, out, err) == kExitUsage);
  CHECK(err.str().find("train.epochs") != std::string::npos);
}

TEST_CASE("ablate writes per-value summaries") {
  const auto dir = scratch("ablate");
  AblateOptions opt;
  opt.base.config_path = write_config(dir, small_config());
  opt.base.out_dir = dir / "runs";
  opt.axis = AblationAxis::kSigma;
  opt.values = {"3", "6"};
  opt.jobs = 3;
  std::ostringstream out, err;
  REQUIRE(cmd_ablate(opt, out, err) == kExitOk);
  fs::path root;
  for (const auto& e : fs::directory_iterator(dir / "runs")) root = e.path();
  const Json summary = read_json(root / "summary.json");
  CHECK(validate_ablation_summary(summary).empty());
  CHECK(summary["rows"].size() == 2);
  CHECK(summary["rows"][0]["runs"] == 2);
  CHECK(fs::exists(root / "summary.csv"));

  opt.values = {"abc"};
  std::ostringstream o2, e2;
  CHECK(cmd_ablate(opt, o2, e2) == kExitUsage);
}

TEST_CASE("ablate preserves partial results when a run fails") {
  const auto dir = scratch("ablate_fail");
  Json doc = small_config();
  doc["schedule"] = {{"schedule_mode", "temporal"}, {"t_mid", 2}, {"t_end", 3}};
  AblateOptions opt;
  opt.base.config_path = write_config(dir, doc);
  opt.base.out_dir = dir / "runs";
  opt.axis = AblationAxis::kComponents;
  opt.values = {"blv"};
  std::ostringstream out, err;
  CHECK(cmd_ablate(opt, out, err) == kExitRunFailure);
  fs::path root;
  for (const auto& e : fs::directory_iterator(dir / "runs")) root = e.path();
  const Json summary = read_json(root / "summary.json");
  CHECK(summary["complete"] == false);
  CHECK(summary.contains("error"));
}

TEST_CASE("median") {
  CHECK(*median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(*median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK(*median({std::nan(""), 1.0}) == 1.0);
  CHECK_FALSE(median({}));
}

TEST_CASE("svg plot is well formed") {
  const auto svg = render_line_plot("t", "x", "y", {{"a", {1.0, 2.0, 1.5}}, {"b<c", {std::nan(""), 0.5, 0.7}}});
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("b&lt;c") != std::string::npos);
  CHECK(svg.find("polyline") != std::string::npos);
}
