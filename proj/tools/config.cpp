#include "config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <set>

#include "blv/error.hpp"

namespace blv::cli {

namespace {

// Reads keys out of one JSON object and remembers which were consumed so
// leftovers can be reported as unknown.
class Section {
 public:
  Section(const Json& doc, std::string path) : path_(std::move(path)) {
    if (doc.is_null()) {
      obj_ = Json::object();
    } else if (!doc.is_object()) {
      throw ConfigError(path_, "expected an object");
    } else {
      obj_ = doc;
    }
  }

  std::string key_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const Json* find(const std::string& key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() || it->is_null() ? nullptr : &*it;
  }

  const Json& require(const std::string& key) {
    const Json* v = find(key);
    if (!v) throw ConfigError(key_path(key), "required key is missing");
    return *v;
  }

  Section child(const std::string& key) {
    const Json* v = find(key);
    return Section(v ? *v : Json(), key_path(key));
  }

  double number(const std::string& key, double fallback) {
    const Json* v = find(key);
    return v ? as_number(*v, key) : fallback;
  }

  double as_number(const Json& v, const std::string& key) const {
    if (!v.is_number()) throw ConfigError(key_path(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(key_path(key), "must be finite");
    return d;
  }

  std::uint64_t as_uint(const Json& v, const std::string& key) const {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) {
      const auto i = v.get<std::int64_t>();
      if (i >= 0) return static_cast<std::uint64_t>(i);
    }
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (d >= 0 && d == std::floor(d) && d < 1.8e19) return static_cast<std::uint64_t>(d);
    }
    throw ConfigError(key_path(key), "expected a nonnegative integer");
  }

  std::uint64_t uint(const std::string& key, std::uint64_t fallback) {
    const Json* v = find(key);
    return v ? as_uint(*v, key) : fallback;
  }

  std::optional<std::uint64_t> optional_uint(const std::string& key) {
    const Json* v = find(key);
    if (!v) return std::nullopt;
    return as_uint(*v, key);
  }

  bool boolean(const std::string& key, bool fallback) {
    const Json* v = find(key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw ConfigError(key_path(key), "expected true or false");
    return v->get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    const Json* v = find(key);
    if (!v) return fallback;
    if (!v->is_string()) throw ConfigError(key_path(key), "expected a string");
    return v->get<std::string>();
  }

  std::vector<std::uint64_t> uint_list(const Json& v, const std::string& key) const {
    if (!v.is_array()) throw ConfigError(key_path(key), "expected an array");
    std::vector<std::uint64_t> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.push_back(as_uint(v[i], key + "[" + std::to_string(i) + "]"));
    }
    return out;
  }

  std::vector<std::size_t> size_list(const std::string& key, std::vector<std::size_t> fallback) {
    const Json* v = find(key);
    if (!v) return fallback;
    const auto raw = uint_list(*v, key);
    return {raw.begin(), raw.end()};
  }

  template <typename Fn>
  auto parse_enum(const std::string& key, const std::string& fallback, Fn&& parser) {
    const std::string name = string(key, fallback);
    try {
      return parser(name);
    } catch (const blv::Error& e) {
      throw ConfigError(key_path(key), e.what());
    }
  }

  // Rejects keys that were never looked up.
  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.contains(key)) throw ConfigError(key_path(key), "unknown key");
    }
  }

 private:
  Json obj_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename Fn>
void revalidate(const std::string& path, Fn&& check) {
  try {
    check();
  } catch (const blv::Error& e) {
    throw ConfigError(path, e.what());
  }
}

}  // namespace

bool is_self_training(const ExperimentConfig& config) {
  return config.train.frequency_source == FrequencySource::kPseudoEpoch ||
         config.train.frequency_source == FrequencySource::kLabeledOnly;
}

ExperimentConfig parse_config(const Json& doc) {
  Section root(doc, "");
  ExperimentConfig cfg;

  {
    Section ds = root.child("dataset");
    const Json& counts = ds.require("counts");
    const auto raw_counts = ds.uint_list(counts, "counts");
    cfg.dataset.counts.assign(raw_counts.begin(), raw_counts.end());
    cfg.dataset.num_classes = ds.uint("num_classes", cfg.dataset.counts.size());
    cfg.dataset.dims = ds.uint("dims", 2);
    cfg.dataset.stddev = ds.number("stddev", 0.9);
    cfg.data_seed = ds.optional_uint("seed");
    if (const Json* means = ds.find("means")) {
      if (!means->is_array()) throw ConfigError(ds.key_path("means"), "expected an array of arrays");
      for (std::size_t k = 0; k < means->size(); ++k) {
        const Json& row = (*means)[k];
        const std::string key = "means[" + std::to_string(k) + "]";
        if (!row.is_array()) throw ConfigError(ds.key_path(key), "expected an array");
        std::vector<double> mean;
        for (std::size_t d = 0; d < row.size(); ++d) {
          mean.push_back(ds.as_number(row[d], key + "[" + std::to_string(d) + "]"));
        }
        cfg.dataset.means.push_back(std::move(mean));
      }
    } else {
      cfg.dataset.means = unit_circle_means(cfg.dataset.num_classes, cfg.dataset.dims);
    }
    cfg.eval_counts = ds.size_list("eval_counts", cfg.dataset.counts);
    cfg.source_counts = ds.size_list("source_counts", cfg.dataset.counts);
    ds.finish();
    revalidate("dataset", [&] { cfg.dataset.validate(); });
    for (const auto* list : {&cfg.eval_counts, &cfg.source_counts}) {
      const std::string name = list == &cfg.eval_counts ? "dataset.eval_counts" : "dataset.source_counts";
      if (list->size() != cfg.dataset.num_classes) {
        throw ConfigError(name, "length must equal dataset.num_classes");
      }
      if (std::accumulate(list->begin(), list->end(), std::size_t{0}) == 0) {
        throw ConfigError(name, "must contain at least one sample");
      }
    }
  }

  {
    Section split = root.child("split");
    cfg.labeled_fraction = split.number("labeled_fraction", 1.0);
    cfg.split_seed = split.optional_uint("seed");
    split.finish();
    if (!(cfg.labeled_fraction > 0.0 && cfg.labeled_fraction <= 1.0)) {
      throw ConfigError("split.labeled_fraction", "must lie in (0, 1]");
    }
  }

  NoiseSpec noise;
  {
    Section ns = root.child("noise");
    noise.family = ns.parse_enum("family", "gaussian", parse_noise_family);
    noise.sigma = ns.number("sigma", 6.0);
    noise.alpha = ns.number("alpha", 0.5);
    noise.beta_param = ns.number("beta", 0.5);
    noise.lambda = ns.number("lambda", 1.0);
    noise.clamp_rule = ns.parse_enum("clamp_rule", "clamp-raw", parse_clamp_rule);
    cfg.train.kappa_rule = ns.parse_enum("no_variation_constant", "expected", parse_kappa_rule);
    ns.finish();
    revalidate("noise", [&] { noise.validate(); });
    cfg.train.noise = noise;
  }

  {
    Section sc = root.child("schedule");
    SigmaSchedule schedule;
    schedule.mode = sc.parse_enum("schedule_mode", "constant", parse_schedule_mode);
    schedule.sigma0 = sc.number("sigma0", noise.sigma);
    cfg.t_mid = sc.optional_uint("t_mid");
    cfg.t_end = sc.optional_uint("t_end");
    sc.finish();
    if (schedule.mode == ScheduleMode::kTemporal && cfg.t_mid && cfg.t_end) {
      schedule.t_mid = *cfg.t_mid;
      schedule.t_end = *cfg.t_end;
      revalidate("schedule", [&] { schedule.validate(); });
    } else if (schedule.mode == ScheduleMode::kConstant) {
      revalidate("schedule", [&] { schedule.validate(); });
    }
    cfg.train.schedule = schedule;
  }

  {
    Section tr = root.child("train");
    TrainConfig& t = cfg.train;
    t.epochs = tr.as_uint(tr.require("epochs"), "epochs");
    t.mode = tr.parse_enum("mode", "blv", parse_loss_mode);
    t.frequency_source = tr.parse_enum("frequency_source", "ground-truth", parse_frequency_source);
    t.batch_size = tr.uint("batch_size", 64);
    t.learning_rate = tr.number("learning_rate", 0.05);
    t.momentum = tr.number("momentum", 0.9);
    cfg.seed = tr.optional_uint("seed");
    if (const Json* seeds = tr.find("seeds")) cfg.seeds = tr.uint_list(*seeds, "seeds");
    t.warmup_epochs = tr.uint("warmup_epochs", 1);
    t.warmup_blv = tr.boolean("warmup_blv", true);
    t.include_labeled_counts = tr.boolean("include_labeled_counts", false);
    t.hidden_units = tr.uint("hidden_units", 0);
    t.smoothing = tr.number("smoothing", kDefaultSmoothing);
    cfg.debug = tr.boolean("debug", false);
    t.keep_last_perturbed = cfg.debug;
    tr.finish();
    if (t.epochs == 0) throw ConfigError("train.epochs", "must be positive");
    if (t.batch_size == 0) throw ConfigError("train.batch_size", "must be positive");
    if (!(t.learning_rate > 0.0)) throw ConfigError("train.learning_rate", "must be positive");
    if (!(t.momentum >= 0.0 && t.momentum < 1.0)) throw ConfigError("train.momentum", "must lie in [0, 1)");
    if (t.smoothing < 0.0) throw ConfigError("train.smoothing", "must be >= 0");
    if (is_self_training(cfg)) {
      if (t.warmup_epochs == 0) throw ConfigError("train.warmup_epochs", "must be >= 1");
      if (t.warmup_epochs > t.epochs) throw ConfigError("train.warmup_epochs", "exceeds train.epochs");
    }
  }

  {
    Section m = root.child("metrics");
    std::vector<std::size_t> fallback;
    if (cfg.dataset.num_classes > 0) fallback.push_back(cfg.dataset.num_classes - 1);
    cfg.train.tail_classes = m.size_list("tail_classes", fallback);
    m.finish();
    for (std::size_t i = 0; i < cfg.train.tail_classes.size(); ++i) {
      if (cfg.train.tail_classes[i] >= cfg.dataset.num_classes) {
        throw ConfigError("metrics.tail_classes[" + std::to_string(i) + "]",
                          "class index out of range");
      }
    }
  }

  root.finish();
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open config '" + path + "'");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("<file>", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc);
}

void apply_override(Json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError(assignment, "override must look like key.path=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  Json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError(path, "empty path component");
    if (!node->is_object()) {
      if (!node->is_null()) throw ConfigError(path, "cannot descend into a non-object");
      *node = Json::object();
    }
    if (dot == std::string::npos) {
      (*node)[key] = std::move(value);
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

std::uint64_t resolve_seed(const ExperimentConfig& config, std::optional<std::uint64_t> flag) {
  if (flag) return *flag;
  if (config.seed) return *config.seed;
  if (const char* env = std::getenv("BLV_SEED"); env && *env) {
    char* end = nullptr;
    const auto v = std::strtoull(env, &end, 10);
    if (end && *end == '\0') return v;
    throw ConfigError("BLV_SEED", "expected an unsigned integer");
  }
  return 0;
}

std::uint64_t planned_iterations(const ExperimentConfig& config) {
  const std::size_t total = std::accumulate(config.dataset.counts.begin(),
                                            config.dataset.counts.end(), std::size_t{0});
  std::size_t labeled = total;
  if (config.labeled_fraction < 1.0 || is_self_training(config)) {
    labeled = static_cast<std::size_t>(std::llround(config.labeled_fraction * static_cast<double>(total)));
    labeled = std::clamp<std::size_t>(labeled, 1, total);
  }
  const TrainConfig& t = config.train;
  if (!is_self_training(config)) return total_iterations(labeled, t.batch_size, t.epochs);
  return total_iterations(labeled, t.batch_size, t.warmup_epochs) +
         total_iterations(total, t.batch_size, t.epochs - t.warmup_epochs);
}

ExperimentConfig resolve(const ExperimentConfig& config, std::uint64_t seed) {
  ExperimentConfig out = config;
  out.seed = seed;
  out.train.seed = seed;
  if (out.train.schedule.mode == ScheduleMode::kTemporal) {
    const std::uint64_t iters = planned_iterations(out);
    const std::uint64_t t_end = out.t_end.value_or(std::max<std::uint64_t>(iters, 2));
    const std::uint64_t t_mid = out.t_mid.value_or(
        std::clamp<std::uint64_t>(static_cast<std::uint64_t>(std::llround(0.75 * static_cast<double>(t_end))),
                                  1, t_end - 1));
    out.t_end = t_end;
    out.t_mid = t_mid;
    out.train.schedule.t_end = t_end;
    out.train.schedule.t_mid = t_mid;
    revalidate("schedule", [&] { out.train.schedule.validate(); });
  }
  return out;
}

Json to_json(const ExperimentConfig& c) {
  Json doc;
  Json& ds = doc["dataset"];
  ds["num_classes"] = c.dataset.num_classes;
  ds["dims"] = c.dataset.dims;
  ds["counts"] = c.dataset.counts;
  ds["means"] = c.dataset.means;
  ds["stddev"] = c.dataset.stddev;
  if (c.data_seed) ds["seed"] = *c.data_seed;
  ds["eval_counts"] = c.eval_counts;
  ds["source_counts"] = c.source_counts;

  Json& split = doc["split"];
  split["labeled_fraction"] = c.labeled_fraction;
  if (c.split_seed) split["seed"] = *c.split_seed;

  const NoiseSpec& n = c.train.noise;
  Json& noise = doc["noise"];
  noise["family"] = std::string(to_string(n.family));
  noise["sigma"] = n.sigma;
  noise["alpha"] = n.alpha;
  noise["beta"] = n.beta_param;
  noise["lambda"] = n.lambda;
  noise["clamp_rule"] = std::string(to_string(n.clamp_rule));
  noise["no_variation_constant"] = std::string(to_string(c.train.kappa_rule));

  Json& sc = doc["schedule"];
  sc["schedule_mode"] = std::string(to_string(c.train.schedule.mode));
  sc["sigma0"] = c.train.schedule.sigma0;
  if (c.t_mid) sc["t_mid"] = *c.t_mid;
  if (c.t_end) sc["t_end"] = *c.t_end;

  const TrainConfig& t = c.train;
  Json& tr = doc["train"];
  tr["mode"] = std::string(to_string(t.mode));
  tr["frequency_source"] = std::string(to_string(t.frequency_source));
  tr["epochs"] = t.epochs;
  tr["batch_size"] = t.batch_size;
  tr["learning_rate"] = t.learning_rate;
  tr["momentum"] = t.momentum;
  if (c.seed) tr["seed"] = *c.seed;
  if (!c.seeds.empty()) tr["seeds"] = c.seeds;
  tr["warmup_epochs"] = t.warmup_epochs;
  tr["warmup_blv"] = t.warmup_blv;
  tr["include_labeled_counts"] = t.include_labeled_counts;
  tr["hidden_units"] = t.hidden_units;
  tr["smoothing"] = t.smoothing;
  tr["debug"] = c.debug;

  doc["metrics"]["tail_classes"] = t.tail_classes;
  return doc;
}

}  // namespace blv::cli
