#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "blv/data.hpp"
#include "blv/histogram.hpp"
#include "blv/loss.hpp"
#include "blv/metrics.hpp"
#include "blv/model.hpp"
#include "blv/variation.hpp"

namespace blv {

/// Where the class frequencies feeding the balancing coefficients come from.
enum class FrequencySource {
  kGroundTruth,  // labeled training counts, fixed before training
  kPseudoEpoch,  // re-estimated from pseudo-labels every self-training epoch
  kSourceProxy,  // a separate (source-domain) histogram, fixed
  kLabeledOnly,  // self-training, but frequencies stay at the labeled counts
};

std::string_view to_string(FrequencySource source);
FrequencySource parse_frequency_source(std::string_view name);

struct TrainConfig {
  LossMode mode = LossMode::kBlv;
  NoiseSpec noise = NoiseSpec::make(NoiseFamily::kGaussian, 6.0);
  SigmaSchedule schedule = SigmaSchedule::constant(6.0);
  KappaRule kappa_rule = KappaRule::kExpectedNoise;
  FrequencySource frequency_source = FrequencySource::kGroundTruth;
  std::size_t epochs = 100;
  std::size_t batch_size = 64;
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::uint64_t seed = 0;
  std::vector<std::size_t> tail_classes;
  std::size_t hidden_units = 0;
  double smoothing = kDefaultSmoothing;
  // Self-training only.
  std::size_t warmup_epochs = 1;
  bool warmup_blv = true;
  bool include_labeled_counts = false;
  // Keep the perturbed logits of the final batch for diagnostics.
  bool keep_last_perturbed = false;

  void validate(std::size_t num_classes) const;
};

struct TrainResult {
  Model model;
  std::vector<double> loss_curve;
  std::vector<FrequencyVector> frequency_history;
  // Self-training: histogram of the pseudo-labels that produced each epoch's
  // frequencies (empty entries during warmup or in labeled-only mode).
  std::vector<ClassHistogram> pseudo_label_history;
  std::vector<double> miou_curve;
  std::vector<std::optional<double>> tail_miou_curve;
  MetricsReport metrics;
  std::uint64_t seed = 0;
  std::uint64_t iterations = 0;
  std::optional<Matrix> last_perturbed_logits;
};

/// Number of mini-batch iterations `epochs` passes over `n` rows take.
std::uint64_t total_iterations(std::size_t n, std::size_t batch_size, std::size_t epochs);

/// Noise-free evaluation of `model` on `eval`.
MetricsReport evaluate(const Model& model, const Dataset& eval,
                       std::span<const std::size_t> tail_classes);

/// Supervised training with a fixed frequency estimate: labeled counts
/// (ground-truth) or `proxy_freqs` (source-proxy, required in that mode).
TrainResult train(const TrainConfig& config, const Dataset& labeled, const Dataset& eval,
                  const std::optional<FrequencyVector>& proxy_freqs = std::nullopt);

/// Self-training: warmup on labeled data, then every epoch pseudo-label the
/// unlabeled set, refresh the frequencies from those pseudo-labels
/// (pseudo-epoch) or keep the labeled estimate (labeled-only), and train one
/// epoch on labeled plus pseudo-labeled rows.
TrainResult self_train(const TrainConfig& config, const Dataset& labeled,
                       const Dataset& unlabeled, const Dataset& eval);

}  // namespace blv
