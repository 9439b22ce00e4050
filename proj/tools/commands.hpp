#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "report.hpp"

namespace blv::cli {

enum ExitCode : int { kExitOk = 0, kExitRunFailure = 1, kExitUsage = 2 };

struct FreqOptions {
  std::vector<std::string> files;
  std::size_t num_classes = 0;
  int ignore_index = kDefaultIgnoreIndex;
  double smoothing = kDefaultSmoothing;
  std::optional<std::filesystem::path> out_dir;
};

struct TrainOptions {
  std::string config_path;
  std::filesystem::path out_dir = "runs";
  std::optional<std::uint64_t> seed;
  bool plot = false;
  std::vector<std::string> overrides;
};

enum class AblationAxis { kVariationFamily, kSigma, kComponents };

std::string_view to_string(AblationAxis axis);
AblationAxis parse_ablation_axis(std::string_view name);
std::vector<std::string> default_axis_values(AblationAxis axis);

struct AblateOptions {
  TrainOptions base;
  AblationAxis axis = AblationAxis::kComponents;
  std::vector<std::string> values;  // empty: the axis defaults
  std::size_t jobs = 1;
};

/// Loads the config file, applies --set overrides and parses.
ExperimentConfig load_with_overrides(const std::string& path,
                                     const std::vector<std::string>& overrides);

/// Generates the data described by a resolved config and runs train or
/// self_train according to the frequency source.
TrainResult run_experiment(const ExperimentConfig& resolved);

/// Runs one experiment and writes <out>/<command>-<seed>-<hash>/report.json
/// (plus SVG plots when requested). Returns the report.
Json execute_run(const ExperimentConfig& resolved, const std::string& command,
                 const std::filesystem::path& out_root, bool plot,
                 std::filesystem::path* run_dir = nullptr);

int cmd_freq(const FreqOptions& options, std::ostream& out, std::ostream& err);
int cmd_train(const TrainOptions& options, std::ostream& out, std::ostream& err);
int cmd_ablate(const AblateOptions& options, std::ostream& out, std::ostream& err);

/// Median of the defined values; nullopt when none are defined.
std::optional<double> median(std::vector<double> values);

}  // namespace blv::cli
