#pragma once

#include <optional>
#include <string_view>

#include "blv/histogram.hpp"
#include "blv/labels.hpp"
#include "blv/matrix.hpp"
#include "blv/rng.hpp"
#include "blv/variation.hpp"

namespace blv {

/// N x C logits, one row per instance.
using LogitBatch = Matrix;

enum class LossMode {
  kPlainCe,      // no perturbation
  kBlv,          // z + c_k * noise
  kNoVariation,  // z + c_k * kappa, a constant in place of the noise
  kNoBalance,    // z + noise, every class weighted equally
};

std::string_view to_string(LossMode mode);
LossMode parse_loss_mode(std::string_view name);

/// Constant used by the no-variation ablation.
enum class KappaRule {
  kExpectedNoise,  // analytic mean of the configured clamped noise
  kUnit,           // 1
};

std::string_view to_string(KappaRule rule);
KappaRule parse_kappa_rule(std::string_view name);

double kappa_for(const NoiseSpec& spec, KappaRule rule);

struct LossOutput {
  double loss = 0.0;
  Matrix grad;  // d loss / d z, N x C
  std::size_t valid_count = 0;
  std::optional<Matrix> perturbed_logits;
};

/// Row-wise softmax with max subtraction. Throws ContractError on NaN.
Matrix softmax(const LogitBatch& logits);

/// Mean cross-entropy over non-ignored rows and its gradient
/// (softmax - onehot) / valid_count. Ignored rows get zero gradient.
LossOutput cross_entropy(const LogitBatch& logits, const LabelBatch& targets);

/// Adds the class-scaled perturbation selected by `mode`. `noise` must match
/// the logits' shape in every mode except plain-ce and no-variation, where it
/// is not read and may be empty. `kappa` is only read by no-variation.
LogitBatch perturb_logits(const LogitBatch& logits, const BalancingCoefficients& coeffs,
                          const Matrix& noise, LossMode mode, double kappa = 0.0);

struct BlvLossOptions {
  KappaRule kappa_rule = KappaRule::kExpectedNoise;
  bool keep_perturbed = false;
};

/// One training-time loss evaluation: resolve sigma at iteration t, draw the
/// noise once (only when the mode reads it), perturb, and take cross-entropy.
/// The gradient is with respect to the original logits; noise and
/// coefficients are constants, so it equals (softmax(z_hat) - onehot) / n.
LossOutput blv_loss(const LogitBatch& logits, const LabelBatch& targets,
                    const BalancingCoefficients& coeffs, const NoiseSpec& noise_spec,
                    const SigmaSchedule& schedule, std::uint64_t t, LossMode mode, Rng& rng,
                    const BlvLossOptions& options = {});

/// Same as blv_loss with the noise supplied by the caller.
LossOutput blv_loss_frozen(const LogitBatch& logits, const LabelBatch& targets,
                           const BalancingCoefficients& coeffs, const Matrix& noise,
                           LossMode mode, double kappa, bool keep_perturbed = false);

}  // namespace blv
