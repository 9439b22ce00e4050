#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "blv/histogram.hpp"
#include "blv/metrics.hpp"
#include "blv/trainer.hpp"

namespace blv::cli {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

Json metrics_to_json(const MetricsReport& m);

/// Report for one training run. `config_echo` is the resolved config document.
Json run_report(const std::string& command, const Json& config_echo, const TrainResult& result,
                double wall_clock_seconds, bool debug);

/// Counts, frequencies, coefficients and the rarest-first ranking.
Json frequency_report(const std::vector<std::string>& files, std::size_t num_classes,
                      int ignore_index, double smoothing, const ClassHistogram& hist);

/// Schema checks; an empty result means the document is valid.
std::vector<std::string> validate_run_report(const Json& report);
std::vector<std::string> validate_ablation_summary(const Json& summary);

/// Stable 64-bit FNV-1a over the compact dump of `doc`, as 16 hex digits.
std::string config_hash(const Json& doc);

struct PlotSeries {
  std::string label;
  std::vector<double> values;  // NaN entries are skipped
};

/// Minimal SVG line chart with axes, tick labels and a legend.
std::string render_line_plot(const std::string& title, const std::string& x_label,
                             const std::string& y_label, const std::vector<PlotSeries>& series);

}  // namespace blv::cli
