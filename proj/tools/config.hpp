#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "blv/data.hpp"
#include "blv/trainer.hpp"

namespace blv::cli {

using Json = nlohmann::json;

/// Configuration problem tied to a dotted key path such as "train.epochs".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key_path, const std::string& message)
      : std::runtime_error(key_path + ": " + message), key_path_(std::move(key_path)) {}
  const std::string& key_path() const noexcept { return key_path_; }

 private:
  std::string key_path_;
};

/// File form of one experiment: dataset, split, noise, schedule, train and
/// metrics sections.
struct ExperimentConfig {
  BlobSpec dataset;
  std::optional<std::uint64_t> data_seed;
  std::vector<std::size_t> eval_counts;    // defaults to dataset.counts
  std::vector<std::size_t> source_counts;  // source-proxy histogram; defaults to dataset.counts

  double labeled_fraction = 1.0;
  std::optional<std::uint64_t> split_seed;

  TrainConfig train;
  std::optional<std::uint64_t> seed;  // train.seed
  std::vector<std::uint64_t> seeds;   // train.seeds, used by ablate
  bool debug = false;

  // Temporal schedule bounds as written; unset values are resolved against
  // the run length.
  std::optional<std::uint64_t> t_mid;
  std::optional<std::uint64_t> t_end;
};

/// Parses and validates a config document. Unknown keys, wrong types and
/// missing required keys (dataset.counts, train.epochs) raise ConfigError.
ExperimentConfig parse_config(const Json& doc);
ExperimentConfig load_config_file(const std::string& path);

/// Applies "a.b.c=value" to the document. The value is parsed as JSON when
/// it is valid JSON, otherwise taken as a string.
void apply_override(Json& doc, const std::string& assignment);

/// Run seed precedence: explicit flag, then train.seed, then BLV_SEED, then 0.
std::uint64_t resolve_seed(const ExperimentConfig& config, std::optional<std::uint64_t> flag);

/// Copy with the seed pinned and temporal schedule bounds filled in.
ExperimentConfig resolve(const ExperimentConfig& config, std::uint64_t seed);

/// Fully explicit document; parse_config(to_json(c)) reproduces c.
Json to_json(const ExperimentConfig& config);

/// Training rows the run will iterate over per epoch, for schedule sizing.
std::uint64_t planned_iterations(const ExperimentConfig& config);

bool is_self_training(const ExperimentConfig& config);

}  // namespace blv::cli
