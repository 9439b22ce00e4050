#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

std::optional<std::uint64_t> seed_flag(const CLI::Option* opt, std::uint64_t value) {
  if (opt->count() == 0) return std::nullopt;
  return value;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace blv::cli;

  CLI::App app{"Balanced logit variation: frequency analysis, training and ablations"};
  app.require_subcommand(1);

  FreqOptions freq;
  std::string freq_out;
  auto* freq_cmd = app.add_subcommand("freq", "Class frequencies and coefficients of PGM label maps");
  freq_cmd->add_option("files", freq.files, "Binary PGM (P5) label maps");
  freq_cmd->add_option("-C,--classes", freq.num_classes, "Number of classes")->required();
  freq_cmd->add_option("--ignore-index", freq.ignore_index, "Label value to skip")
      ->capture_default_str();
  freq_cmd->add_option("--smoothing", freq.smoothing, "Additive smoothing per class")
      ->capture_default_str();
  freq_cmd->add_option("--out", freq_out, "Directory for freq.json");

  TrainOptions train;
  std::string train_out = "runs";
  std::uint64_t train_seed = 0;
  auto* train_cmd = app.add_subcommand("train", "Run one experiment from a config file");
  train_cmd->add_option("--config", train.config_path, "Experiment config (JSON)")->required();
  train_cmd->add_option("--out", train_out, "Output root directory")->capture_default_str();
  auto* train_seed_opt = train_cmd->add_option("--seed", train_seed, "Run seed");
  train_cmd->add_flag("--plot", train.plot, "Write SVG curves");
  train_cmd->add_option("--set", train.overrides, "Override a config key: key.path=value");

  AblateOptions ablate;
  std::string ablate_out = "runs";
  std::string axis = "components";
  std::uint64_t ablate_seed = 0;
  auto* ablate_cmd = app.add_subcommand("ablate", "Sweep one ablation axis over seeds");
  ablate_cmd->add_option("--config", ablate.base.config_path, "Experiment config (JSON)")
      ->required();
  ablate_cmd->add_option("--out", ablate_out, "Output root directory")->capture_default_str();
  auto* ablate_seed_opt = ablate_cmd->add_option("--seed", ablate_seed, "Single seed instead of train.seeds");
  ablate_cmd->add_flag("--plot", ablate.base.plot, "Write SVG curves per run");
  ablate_cmd->add_option("--set", ablate.base.overrides, "Override a config key: key.path=value");
  ablate_cmd->add_option("--axis", axis, "variation-family | sigma | components")
      ->capture_default_str();
  ablate_cmd->add_option("--values", ablate.values, "Axis values (default: the standard grid)")
      ->delimiter(',');
  ablate_cmd->add_option("-j,--jobs", ablate.jobs, "Parallel runs")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (freq_cmd->parsed()) {
      if (!freq_out.empty()) freq.out_dir = freq_out;
      return cmd_freq(freq, std::cout, std::cerr);
    }
    if (train_cmd->parsed()) {
      train.out_dir = train_out;
      train.seed = seed_flag(train_seed_opt, train_seed);
      return cmd_train(train, std::cout, std::cerr);
    }
    ablate.base.out_dir = ablate_out;
    ablate.base.seed = seed_flag(ablate_seed_opt, ablate_seed);
    ablate.axis = parse_ablation_axis(axis);
    return cmd_ablate(ablate, std::cout, std::cerr);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRunFailure;
  }
}
