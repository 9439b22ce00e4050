#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "blv/matrix.hpp"
#include "blv/rng.hpp"

namespace blv {

enum class NoiseFamily { kGaussian, kUniform, kBeta, kExponential, kNone };

/// How a raw draw x becomes a perturbation magnitude.
///   kClampRaw:     max(0, min(1, x))   (negative draws become 0)
///   kAbsThenClamp: min(1, |x|)
enum class ClampRule { kClampRaw, kAbsThenClamp };

std::string_view to_string(NoiseFamily family);
std::string_view to_string(ClampRule rule);
NoiseFamily parse_noise_family(std::string_view name);
ClampRule parse_clamp_rule(std::string_view name);

/// Distribution of the logit perturbation. Construct through `make`, which
/// rejects parameters that would produce NaN draws.
struct NoiseSpec {
  NoiseFamily family = NoiseFamily::kGaussian;
  double sigma = 6.0;       // gaussian standard deviation
  double alpha = 0.5;       // beta family
  double beta_param = 0.5;  // beta family
  double lambda = 1.0;      // exponential rate
  ClampRule clamp_rule = ClampRule::kClampRaw;

  static NoiseSpec make(NoiseFamily family, double sigma = 6.0, double alpha = 0.5,
                        double beta_param = 0.5, double lambda = 1.0,
                        ClampRule clamp_rule = ClampRule::kClampRaw);
  static NoiseSpec none() { return make(NoiseFamily::kNone); }

  /// Throws ContractError if a required parameter is non-positive or non-finite.
  void validate() const;

  /// Copy with the gaussian standard deviation replaced.
  NoiseSpec with_sigma(double s) const;

  friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

enum class ScheduleMode { kConstant, kTemporal };

std::string_view to_string(ScheduleMode mode);
ScheduleMode parse_schedule_mode(std::string_view name);

/// Iteration-dependent gaussian sigma. Temporal mode rises linearly from 0
/// at t=0 to sigma0 at t_mid, then falls linearly to 0 at t_end.
struct SigmaSchedule {
  ScheduleMode mode = ScheduleMode::kConstant;
  double sigma0 = 6.0;
  std::uint64_t t_mid = 0;
  std::uint64_t t_end = 1;

  static SigmaSchedule constant(double sigma0);
  static SigmaSchedule temporal(double sigma0, std::uint64_t t_mid, std::uint64_t t_end);

  void validate() const;

  friend bool operator==(const SigmaSchedule&, const SigmaSchedule&) = default;
};

/// Throws ContractError when t > t_end in temporal mode.
double sigma_at(const SigmaSchedule& schedule, std::uint64_t t);

/// rows x cols independent draws, each mapped into [0, 1] by the clamp rule.
/// The none family returns zeros without touching the generator.
Matrix sample_noise(const NoiseSpec& spec, std::size_t rows, std::size_t cols, Rng& rng);

/// One clamped draw.
double sample_one(const NoiseSpec& spec, Rng& rng);

/// Closed-form expectation of one clamped draw.
double expected_clamped_noise(const NoiseSpec& spec);

}  // namespace blv
