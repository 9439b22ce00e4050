#include "blv/trainer.hpp"

#include <cmath>
#include <numeric>

#include "blv/error.hpp"

namespace blv {

std::string_view to_string(FrequencySource source) {
  switch (source) {
    case FrequencySource::kGroundTruth: return "ground-truth";
    case FrequencySource::kPseudoEpoch: return "pseudo-epoch";
    case FrequencySource::kSourceProxy: return "source-proxy";
    case FrequencySource::kLabeledOnly: return "labeled-only";
  }
  return "unknown";
}

FrequencySource parse_frequency_source(std::string_view name) {
  for (auto s : {FrequencySource::kGroundTruth, FrequencySource::kPseudoEpoch,
                 FrequencySource::kSourceProxy, FrequencySource::kLabeledOnly}) {
    if (name == to_string(s)) return s;
  }
  throw ContractError("unknown frequency source '" + std::string(name) + "'");
}

void TrainConfig::validate(std::size_t num_classes) const {
  noise.validate();
  schedule.validate();
  if (epochs == 0) throw ContractError("epochs must be positive");
  if (batch_size == 0) throw ContractError("batch_size must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ContractError("learning_rate must be positive");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ContractError("momentum must lie in [0, 1)");
  if (!(smoothing >= 0.0) || !std::isfinite(smoothing)) {
    throw ContractError("smoothing must be >= 0");
  }
  for (std::size_t k : tail_classes) {
    if (k >= num_classes) {
      throw ContractError("tail class " + std::to_string(k) + " is outside [0, " +
                          std::to_string(num_classes) + ")");
    }
  }
}

std::uint64_t total_iterations(std::size_t n, std::size_t batch_size, std::size_t epochs) {
  if (batch_size == 0) throw ContractError("batch_size must be positive");
  return static_cast<std::uint64_t>((n + batch_size - 1) / batch_size) * epochs;
}

MetricsReport evaluate(const Model& model, const Dataset& eval,
                       std::span<const std::size_t> tail_classes) {
  if (eval.size() == 0) throw DegenerateInputError("evaluation set is empty");
  const LabelBatch pred = predict(model, eval.features);
  return iou_report(confusion(pred, eval.label_batch(), eval.num_classes), tail_classes);
}

namespace {

// Owns the mutable state of one run: parameters, momentum buffer, iteration
// counter and the two generator streams (shuffling and noise).
class Session {
 public:
  Session(const TrainConfig& config, std::size_t dims, std::size_t classes)
      : config_(config),
        shuffle_rng_(derive_seed(config.seed, 1)),
        noise_rng_(derive_seed(config.seed, 2)) {
    Rng init_rng(derive_seed(config.seed, 0));
    model_ = Model::with_hidden(dims, config.hidden_units, classes, init_rng);
    velocity_ = zeros_like(model_);
  }

  // One shuffled pass; returns the instance-weighted mean loss.
  double run_epoch(const Dataset& data, const BalancingCoefficients& coeffs, LossMode mode) {
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng_.below(i)]);
    }
    BlvLossOptions options{config_.kappa_rule, config_.keep_last_perturbed};
    double weighted = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += config_.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config_.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, stop - start);
      const Matrix x = gather_rows(data.features, idx);
      LabelBatch y;
      y.labels.reserve(idx.size());
      for (std::size_t i : idx) y.labels.push_back(data.labels[i]);

      const Matrix logits = forward(model_, x);
      LossOutput out = blv_loss(logits, y, coeffs, config_.noise, config_.schedule, t_, mode,
                                noise_rng_, options);
      const ModelGrads grads = backward(model_, x, out.grad);
      sgd_step(model_, grads, config_.learning_rate, config_.momentum, velocity_);
      weighted += out.loss * static_cast<double>(out.valid_count);
      seen += out.valid_count;
      if (out.perturbed_logits) last_perturbed_ = std::move(out.perturbed_logits);
      ++t_;
    }
    return weighted / static_cast<double>(seen);
  }

  void record_eval(TrainResult& result, const Dataset& eval) const {
    const MetricsReport m = evaluate(model_, eval, config_.tail_classes);
    result.miou_curve.push_back(m.miou);
    result.tail_miou_curve.push_back(m.tail_miou);
  }

  void finish(TrainResult& result, const Dataset& eval) {
    result.metrics = evaluate(model_, eval, config_.tail_classes);
    result.model = model_;
    result.seed = config_.seed;
    result.iterations = t_;
    result.last_perturbed_logits = std::move(last_perturbed_);
  }

  const Model& model() const { return model_; }

 private:
  const TrainConfig& config_;
  Model model_;
  ModelGrads velocity_;
  Rng shuffle_rng_;
  Rng noise_rng_;
  std::uint64_t t_ = 0;
  std::optional<Matrix> last_perturbed_;
};

BalancingCoefficients coefficients_for(const FrequencyVector& freqs, LossMode mode) {
  if (mode == LossMode::kNoBalance || mode == LossMode::kPlainCe) {
    return BalancingCoefficients::uniform(freqs.num_classes());
  }
  return balancing_coefficients(freqs);
}

void check_schedule_covers(const TrainConfig& config, std::uint64_t iterations) {
  if (config.schedule.mode == ScheduleMode::kTemporal && iterations > 0 &&
      config.schedule.t_end < iterations - 1) {
    throw ContractError("temporal schedule t_end " + std::to_string(config.schedule.t_end) +
                        " is shorter than the run (" + std::to_string(iterations) +
                        " iterations)");
  }
}

void check_datasets(const Dataset& labeled, const Dataset& eval) {
  if (labeled.size() == 0) throw DegenerateInputError("training set is empty");
  if (eval.size() == 0) throw DegenerateInputError("evaluation set is empty");
  if (labeled.num_classes < 2) throw ContractError("training set needs at least two classes");
  if (eval.features.cols() != labeled.features.cols() || eval.num_classes != labeled.num_classes) {
    throw ContractError("evaluation set shape does not match training set");
  }
}

}  // namespace

TrainResult train(const TrainConfig& config, const Dataset& labeled, const Dataset& eval,
                  const std::optional<FrequencyVector>& proxy_freqs) {
  check_datasets(labeled, eval);
  config.validate(labeled.num_classes);

  FrequencyVector freqs;
  switch (config.frequency_source) {
    case FrequencySource::kGroundTruth:
      freqs = normalize(count_pixels(labeled.label_batch(), labeled.num_classes), config.smoothing);
      break;
    case FrequencySource::kSourceProxy:
      if (!proxy_freqs) throw ContractError("source-proxy training needs proxy frequencies");
      if (proxy_freqs->num_classes() != labeled.num_classes) {
        throw ContractError("proxy frequencies have the wrong number of classes");
      }
      freqs = *proxy_freqs;
      break;
    case FrequencySource::kPseudoEpoch:
    case FrequencySource::kLabeledOnly:
      throw ContractError("frequency source '" + std::string(to_string(config.frequency_source)) +
                          "' requires self-training");
  }
  check_schedule_covers(config, total_iterations(labeled.size(), config.batch_size, config.epochs));

  const BalancingCoefficients coeffs = coefficients_for(freqs, config.mode);
  Session session(config, labeled.features.cols(), labeled.num_classes);
  TrainResult result;
  for (std::size_t e = 0; e < config.epochs; ++e) {
    result.loss_curve.push_back(session.run_epoch(labeled, coeffs, config.mode));
    result.frequency_history.push_back(freqs);
    session.record_eval(result, eval);
  }
  session.finish(result, eval);
  return result;
}

TrainResult self_train(const TrainConfig& config, const Dataset& labeled,
                       const Dataset& unlabeled, const Dataset& eval) {
  check_datasets(labeled, eval);
  config.validate(labeled.num_classes);
  const auto source = config.frequency_source;
  if (source != FrequencySource::kPseudoEpoch && source != FrequencySource::kLabeledOnly) {
    throw ContractError("self-training needs frequency source pseudo-epoch or labeled-only");
  }
  if (config.warmup_epochs == 0) throw ContractError("self-training needs warmup_epochs >= 1");
  if (config.warmup_epochs > config.epochs) {
    throw ContractError("warmup_epochs exceeds epochs");
  }
  if (unlabeled.size() == 0) {
    if (source == FrequencySource::kPseudoEpoch) {
      throw DegenerateInputError("pseudo-epoch self-training needs unlabeled data");
    }
  } else if (unlabeled.features.cols() != labeled.features.cols() ||
             unlabeled.num_classes != labeled.num_classes) {
    throw ContractError("unlabeled set shape does not match labeled set");
  }

  const std::size_t c = labeled.num_classes;
  const ClassHistogram labeled_hist = count_pixels(labeled.label_batch(), c);
  const FrequencyVector labeled_freqs = normalize(labeled_hist, config.smoothing);

  const std::size_t mixed_epochs = config.epochs - config.warmup_epochs;
  check_schedule_covers(
      config, total_iterations(labeled.size(), config.batch_size, config.warmup_epochs) +
                  total_iterations(labeled.size() + unlabeled.size(), config.batch_size,
                                   mixed_epochs));

  Session session(config, labeled.features.cols(), c);
  TrainResult result;

  const LossMode warmup_mode = config.warmup_blv ? config.mode : LossMode::kPlainCe;
  const BalancingCoefficients warmup_coeffs = coefficients_for(labeled_freqs, warmup_mode);
  for (std::size_t e = 0; e < config.warmup_epochs; ++e) {
    result.loss_curve.push_back(session.run_epoch(labeled, warmup_coeffs, warmup_mode));
    result.frequency_history.push_back(labeled_freqs);
    result.pseudo_label_history.emplace_back();
    session.record_eval(result, eval);
  }

  for (std::size_t e = 0; e < mixed_epochs; ++e) {
    Dataset pseudo = unlabeled;
    FrequencyVector freqs = labeled_freqs;
    ClassHistogram pseudo_hist;
    if (unlabeled.size() > 0) {
      pseudo.labels = predict(session.model(), unlabeled.features).labels;
      pseudo_hist = count_pixels(pseudo.label_batch(), c);
      if (source == FrequencySource::kPseudoEpoch) {
        ClassHistogram pooled = pseudo_hist;
        if (config.include_labeled_counts) pooled += labeled_hist;
        freqs = normalize(pooled, config.smoothing);
      }
    }
    const Dataset mixed = concat(labeled, pseudo);
    result.loss_curve.push_back(
        session.run_epoch(mixed, coefficients_for(freqs, config.mode), config.mode));
    result.frequency_history.push_back(std::move(freqs));
    result.pseudo_label_history.push_back(std::move(pseudo_hist));
    session.record_eval(result, eval);
  }
  session.finish(result, eval);
  return result;
}

}  // namespace blv
