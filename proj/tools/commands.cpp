#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "blv/error.hpp"
#include "blv/pgm.hpp"

namespace blv::cli {

namespace fs = std::filesystem;

std::string_view to_string(AblationAxis axis) {
  switch (axis) {
    case AblationAxis::kVariationFamily: return "variation-family";
    case AblationAxis::kSigma: return "sigma";
    case AblationAxis::kComponents: return "components";
  }
  return "unknown";
}

AblationAxis parse_ablation_axis(std::string_view name) {
  for (auto a : {AblationAxis::kVariationFamily, AblationAxis::kSigma, AblationAxis::kComponents}) {
    if (name == to_string(a)) return a;
  }
  throw ConfigError("--axis", "unknown ablation axis '" + std::string(name) + "'");
}

std::vector<std::string> default_axis_values(AblationAxis axis) {
  switch (axis) {
    case AblationAxis::kVariationFamily: return {"gaussian", "uniform", "beta", "exponential"};
    case AblationAxis::kSigma: return {"3", "4", "5", "6", "7"};
    case AblationAxis::kComponents: return {"blv", "no-variation", "no-balance", "plain-ce"};
  }
  return {};
}

namespace {

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open config '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("<file>", std::string("invalid JSON in '") + path + "': " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

Dataset blobs_with(const ExperimentConfig& c, const std::vector<std::size_t>& counts,
                   std::uint64_t seed) {
  BlobSpec spec = c.dataset;
  spec.counts = counts;
  spec.seed = seed;
  return generate_longtail_blobs(spec);
}

}  // namespace

ExperimentConfig load_with_overrides(const std::string& path,
                                     const std::vector<std::string>& overrides) {
  Json doc = read_json_file(path);
  for (const auto& o : overrides) apply_override(doc, o);
  return parse_config(doc);
}

TrainResult run_experiment(const ExperimentConfig& c) {
  const std::uint64_t seed = c.train.seed;
  const std::uint64_t data_seed = c.data_seed.value_or(seed);
  const Dataset full = blobs_with(c, c.dataset.counts, data_seed);
  const Dataset eval = blobs_with(c, c.eval_counts, derive_seed(data_seed, 100));

  if (is_self_training(c)) {
    const Split split = split_labeled_unlabeled(
        full, {c.labeled_fraction, c.split_seed.value_or(derive_seed(data_seed, 200))});
    return self_train(c.train, split.labeled, split.unlabeled, eval);
  }

  Dataset labeled = full;
  if (c.labeled_fraction < 1.0) {
    labeled = split_labeled_unlabeled(
                  full, {c.labeled_fraction, c.split_seed.value_or(derive_seed(data_seed, 200))})
                  .labeled;
  }
  std::optional<FrequencyVector> proxy;
  if (c.train.frequency_source == FrequencySource::kSourceProxy) {
    const Dataset source = blobs_with(c, c.source_counts, derive_seed(data_seed, 300));
    proxy = normalize(count_pixels(source.label_batch(), source.num_classes), c.train.smoothing);
  }
  return train(c.train, labeled, eval, proxy);
}

Json execute_run(const ExperimentConfig& resolved, const std::string& command,
                 const fs::path& out_root, bool plot, fs::path* run_dir) {
  const Json echo = to_json(resolved);
  const auto start = std::chrono::steady_clock::now();
  const TrainResult result = run_experiment(resolved);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const Json report = run_report(command, echo, result, seconds, resolved.debug);

  const fs::path dir =
      out_root / (command + "-" + std::to_string(resolved.train.seed) + "-" + config_hash(echo));
  fs::create_directories(dir);
  write_text(dir / "report.json", report.dump(2) + "\n");
  if (plot) {
    write_text(dir / "loss.svg",
               render_line_plot("Training loss", "epoch", "mean loss",
                                {{std::string(to_string(resolved.train.mode)), result.loss_curve}}));
    std::vector<double> tail;
    for (const auto& v : result.tail_miou_curve) tail.push_back(v.value_or(std::nan("")));
    write_text(dir / "tail_miou.svg",
               render_line_plot("Held-out IoU", "epoch", "IoU",
                                {{"tail mIoU", tail}, {"mIoU", result.miou_curve}}));
  }
  if (run_dir) *run_dir = dir;
  return report;
}

int cmd_freq(const FreqOptions& options, std::ostream& out, std::ostream& err) {
  if (options.files.empty()) {
    err << "usage: blv freq <label-map.pgm>... --classes C\n";
    return kExitUsage;
  }
  if (options.num_classes == 0) {
    err << "error: --classes must be positive\n";
    return kExitUsage;
  }
  ClassHistogram total(options.num_classes);
  bool failed = false;
  for (const auto& path : options.files) {
    try {
      const LabelMap map = read_label_map_file(path);
      total += count_pixels(map.to_batch(options.ignore_index), options.num_classes);
    } catch (const ParseError& e) {
      err << path << ": parse error at " << e.what() << "\n";
      failed = true;
    } catch (const LabelRangeError& e) {
      err << path << ": " << e.what() << "\n";
      failed = true;
    } catch (const Error& e) {
      err << path << ": " << e.what() << "\n";
      failed = true;
    }
  }
  if (failed) return kExitRunFailure;

  Json report;
  try {
    report = frequency_report(options.files, options.num_classes, options.ignore_index,
                              options.smoothing, total);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitRunFailure;
  }
  out << report.dump(2) << "\n";
  if (options.out_dir) {
    fs::create_directories(*options.out_dir);
    write_text(*options.out_dir / "freq.json", report.dump(2) + "\n");
  }
  return kExitOk;
}

int cmd_train(const TrainOptions& options, std::ostream& out, std::ostream& err) {
  ExperimentConfig resolved;
  try {
    const ExperimentConfig cfg = load_with_overrides(options.config_path, options.overrides);
    resolved = resolve(cfg, resolve_seed(cfg, options.seed));
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  }
  try {
    fs::path dir;
    const Json report = execute_run(resolved, "train", options.out_dir, options.plot, &dir);
    out << "wrote " << (dir / "report.json").string() << "\n";
    out << "mode=" << report["mode"].get<std::string>() << " seed=" << resolved.train.seed
        << " miou=" << report["metrics"]["miou"].dump()
        << " tail_miou=" << report["metrics"]["tail_miou"].dump() << "\n";
  } catch (const std::exception& e) {
    err << "run failed: " << e.what() << "\n";
    return kExitRunFailure;
  }
  return kExitOk;
}

std::optional<double> median(std::vector<double> values) {
  std::erase_if(values, [](double v) { return !std::isfinite(v); });
  if (values.empty()) return std::nullopt;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

Json cell_document(const Json& base, AblationAxis axis, const std::string& value) {
  Json doc = base;
  switch (axis) {
    case AblationAxis::kVariationFamily:
      apply_override(doc, "noise.family=\"" + value + "\"");
      break;
    case AblationAxis::kSigma: {
      Json v = Json::parse(value, nullptr, false);
      if (v.is_discarded() || !v.is_number()) throw ConfigError("--values", "sigma '" + value + "' is not a number");
      apply_override(doc, "noise.sigma=" + value);
      apply_override(doc, "schedule.sigma0=" + value);
      break;
    }
    case AblationAxis::kComponents:
      apply_override(doc, "train.mode=\"" + value + "\"");
      break;
  }
  return doc;
}

struct RunSlot {
  std::size_t cell = 0;
  std::uint64_t seed = 0;
  std::optional<double> tail_miou;
  double miou = 0.0;
  std::string dir;
  bool done = false;
};

}  // namespace

int cmd_ablate(const AblateOptions& options, std::ostream& out, std::ostream& err) {
  const std::vector<std::string> values =
      options.values.empty() ? default_axis_values(options.axis) : options.values;
  Json base;
  std::vector<ExperimentConfig> cells;
  std::vector<std::uint64_t> seeds;
  try {
    base = read_json_file(options.base.config_path);
    for (const auto& o : options.base.overrides) apply_override(base, o);
    const ExperimentConfig base_cfg = parse_config(base);
    if (options.base.seed) {
      seeds = {*options.base.seed};
    } else if (!base_cfg.seeds.empty()) {
      seeds = base_cfg.seeds;
    } else {
      seeds = {resolve_seed(base_cfg, std::nullopt)};
    }
    if (values.empty()) throw ConfigError("--values", "no values for axis");
    for (const auto& v : values) cells.push_back(parse_config(cell_document(base, options.axis, v)));
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  }

  const fs::path root = options.base.out_dir /
                        ("ablate-" + std::to_string(seeds.front()) + "-" + config_hash(base));
  fs::create_directories(root);

  std::vector<RunSlot> slots;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (auto s : seeds) slots.push_back({c, s, std::nullopt, 0.0, "", false});
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::mutex err_mutex;
  std::string failure;
  auto worker = [&] {
    while (!abort.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= slots.size()) return;
      RunSlot& slot = slots[i];
      try {
        const ExperimentConfig resolved = resolve(cells[slot.cell], slot.seed);
        const fs::path cell_root =
            root / "runs" / (std::string(to_string(options.axis)) + "-" + values[slot.cell]);
        fs::path dir;
        const Json report = execute_run(resolved, "train", cell_root, options.base.plot, &dir);
        const Json& m = report["metrics"];
        slot.miou = m["miou"].get<double>();
        if (!m["tail_miou"].is_null()) slot.tail_miou = m["tail_miou"].get<double>();
        slot.dir = fs::relative(dir, root).string();
        slot.done = true;
      } catch (const std::exception& e) {
        std::lock_guard lock(err_mutex);
        if (failure.empty()) {
          failure = values[slot.cell] + " seed " + std::to_string(slot.seed) + ": " + e.what();
        }
        abort.store(true);
      }
    }
  };
  const std::size_t jobs = std::clamp<std::size_t>(options.jobs, 1, slots.size());
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  // Aggregate after the join so no run is still writing.
  Json summary;
  summary["schema"] = kSchemaVersion;
  summary["command"] = "ablate";
  summary["axis"] = std::string(to_string(options.axis));
  summary["seeds"] = seeds;
  summary["complete"] = failure.empty();
  if (!failure.empty()) summary["error"] = failure;
  summary["rows"] = Json::array();
  std::string csv = "axis,value,runs,median_tail_miou,median_miou\n";
  for (std::size_t c = 0; c < cells.size(); ++c) {
    std::vector<double> tail;
    std::vector<double> miou;
    Json tail_json = Json::array();
    Json dirs = Json::array();
    for (const auto& slot : slots) {
      if (slot.cell != c || !slot.done) continue;
      miou.push_back(slot.miou);
      tail.push_back(slot.tail_miou.value_or(std::nan("")));
      tail_json.push_back(slot.tail_miou ? Json(*slot.tail_miou) : Json(nullptr));
      dirs.push_back(slot.dir);
    }
    const auto med_tail = median(tail);
    const auto med_miou = median(miou);
    if (miou.empty()) continue;
    Json row;
    row["value"] = values[c];
    row["runs"] = miou.size();
    row["median_tail_miou"] = med_tail ? Json(*med_tail) : Json(nullptr);
    row["median_miou"] = *med_miou;
    row["tail_miou"] = tail_json;
    row["miou"] = miou;
    row["run_dirs"] = dirs;
    summary["rows"].push_back(row);
    csv += std::string(to_string(options.axis)) + "," + values[c] + "," +
           std::to_string(miou.size()) + "," + (med_tail ? row["median_tail_miou"].dump() : "") +
           "," + row["median_miou"].dump() + "\n";
  }
  write_text(root / "summary.json", summary.dump(2) + "\n");
  write_text(root / "summary.csv", csv);

  out << "wrote " << (root / "summary.json").string() << "\n" << csv;
  if (!failure.empty()) {
    err << "ablation aborted: " << failure << "\n";
    return kExitRunFailure;
  }
  return kExitOk;
}

}  // namespace blv::cli
