#include "blv/loss.hpp"

#include <algorithm>
#include <cmath>

#include "blv/error.hpp"

namespace blv {

std::string_view to_string(LossMode mode) {
  switch (mode) {
    case LossMode::kPlainCe: return "plain-ce";
    case LossMode::kBlv: return "blv";
    case LossMode::kNoVariation: return "no-variation";
    case LossMode::kNoBalance: return "no-balance";
  }
  return "unknown";
}

LossMode parse_loss_mode(std::string_view name) {
  for (auto m : {LossMode::kPlainCe, LossMode::kBlv, LossMode::kNoVariation,
                 LossMode::kNoBalance}) {
    if (name == to_string(m)) return m;
  }
  throw ContractError("unknown loss mode '" + std::string(name) + "'");
}

std::string_view to_string(KappaRule rule) {
  return rule == KappaRule::kExpectedNoise ? "expected" : "unit";
}

KappaRule parse_kappa_rule(std::string_view name) {
  if (name == "expected") return KappaRule::kExpectedNoise;
  if (name == "unit") return KappaRule::kUnit;
  throw ContractError("unknown no-variation constant '" + std::string(name) + "'");
}

double kappa_for(const NoiseSpec& spec, KappaRule rule) {
  return rule == KappaRule::kUnit ? 1.0 : expected_clamped_noise(spec);
}

namespace {

void check_logits(const LogitBatch& logits) {
  for (double v : logits.values()) {
    if (std::isnan(v)) throw ContractError("logits contain NaN");
    if (!std::isfinite(v)) throw ContractError("logits contain a non-finite value");
  }
}

double row_max(std::span<const double> row) { return *std::max_element(row.begin(), row.end()); }

}  // namespace

Matrix softmax(const LogitBatch& logits) {
  check_logits(logits);
  Matrix probs(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto z = logits.row(i);
    auto p = probs.row(i);
    const double m = row_max(z);
    double sum = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) {
      p[k] = std::exp(z[k] - m);
      sum += p[k];
    }
    for (double& v : p) v /= sum;
  }
  return probs;
}

LossOutput cross_entropy(const LogitBatch& logits, const LabelBatch& targets) {
  if (logits.rows() != targets.size()) {
    throw ContractError("logit rows (" + std::to_string(logits.rows()) +
                        ") do not match label count (" + std::to_string(targets.size()) + ")");
  }
  if (logits.cols() < 2) throw ContractError("cross-entropy needs at least two classes");
  check_logits(logits);
  validate_labels(targets, logits.cols());

  LossOutput out;
  out.grad = Matrix(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (!targets.is_ignored(i)) ++out.valid_count;
  }
  if (out.valid_count == 0) throw DegenerateInputError("every instance in the batch is ignored");

  const double inv_n = 1.0 / static_cast<double>(out.valid_count);
  double total = 0.0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    if (targets.is_ignored(i)) continue;
    const auto z = logits.row(i);
    auto g = out.grad.row(i);
    const auto y = static_cast<std::size_t>(targets.labels[i]);
    const double m = row_max(z);
    double sum = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) {
      g[k] = std::exp(z[k] - m);
      sum += g[k];
    }
    // -log p_y = log-sum-exp(z) - z_y
    total += (m + std::log(sum)) - z[y];
    for (double& v : g) v = v / sum * inv_n;
    g[y] -= inv_n;
  }
  out.loss = total * inv_n;
  return out;
}

LogitBatch perturb_logits(const LogitBatch& logits, const BalancingCoefficients& coeffs,
                          const Matrix& noise, LossMode mode, double kappa) {
  if (mode == LossMode::kPlainCe) return logits;
  if (coeffs.num_classes() != logits.cols()) {
    throw ContractError("coefficient count does not match the number of classes");
  }
  const bool reads_noise = mode == LossMode::kBlv || mode == LossMode::kNoBalance;
  if (reads_noise && !noise.same_shape(logits)) {
    throw ContractError("noise shape " + std::to_string(noise.rows()) + "x" +
                        std::to_string(noise.cols()) + " does not match logits " +
                        std::to_string(logits.rows()) + "x" + std::to_string(logits.cols()));
  }
  LogitBatch out = logits;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto z = out.row(i);
    for (std::size_t k = 0; k < z.size(); ++k) {
      switch (mode) {
        case LossMode::kBlv: z[k] += coeffs.coeffs[k] * noise(i, k); break;
        case LossMode::kNoVariation: z[k] += coeffs.coeffs[k] * kappa; break;
        case LossMode::kNoBalance: z[k] += noise(i, k); break;
        case LossMode::kPlainCe: break;
      }
    }
  }
  return out;
}

LossOutput blv_loss_frozen(const LogitBatch& logits, const LabelBatch& targets,
                           const BalancingCoefficients& coeffs, const Matrix& noise,
                           LossMode mode, double kappa, bool keep_perturbed) {
  LogitBatch perturbed = perturb_logits(logits, coeffs, noise, mode, kappa);
  LossOutput out = cross_entropy(perturbed, targets);
  if (keep_perturbed) out.perturbed_logits = std::move(perturbed);
  return out;
}

LossOutput blv_loss(const LogitBatch& logits, const LabelBatch& targets,
                    const BalancingCoefficients& coeffs, const NoiseSpec& noise_spec,
                    const SigmaSchedule& schedule, std::uint64_t t, LossMode mode, Rng& rng,
                    const BlvLossOptions& options) {
  const NoiseSpec spec = noise_spec.family == NoiseFamily::kGaussian
                             ? noise_spec.with_sigma(sigma_at(schedule, t))
                             : noise_spec;
  Matrix noise;
  double kappa = 0.0;
  if (mode == LossMode::kBlv || mode == LossMode::kNoBalance) {
    noise = logits.empty() ? Matrix(logits.rows(), logits.cols())
                           : sample_noise(spec, logits.rows(), logits.cols(), rng);
  } else if (mode == LossMode::kNoVariation) {
    kappa = kappa_for(spec, options.kappa_rule);
  }
  return blv_loss_frozen(logits, targets, coeffs, noise, mode, kappa, options.keep_perturbed);
}

}  // namespace blv
