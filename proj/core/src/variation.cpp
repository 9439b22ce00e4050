#include "blv/variation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/special_functions/beta.hpp>

#include "blv/error.hpp"

namespace blv {

std::string_view to_string(NoiseFamily family) {
  switch (family) {
    case NoiseFamily::kGaussian: return "gaussian";
    case NoiseFamily::kUniform: return "uniform";
    case NoiseFamily::kBeta: return "beta";
    case NoiseFamily::kExponential: return "exponential";
    case NoiseFamily::kNone: return "none";
  }
  return "unknown";
}

std::string_view to_string(ClampRule rule) {
  return rule == ClampRule::kClampRaw ? "clamp-raw" : "abs-then-clamp";
}

std::string_view to_string(ScheduleMode mode) {
  return mode == ScheduleMode::kConstant ? "constant" : "temporal";
}

NoiseFamily parse_noise_family(std::string_view name) {
  for (auto f : {NoiseFamily::kGaussian, NoiseFamily::kUniform, NoiseFamily::kBeta,
                 NoiseFamily::kExponential, NoiseFamily::kNone}) {
    if (name == to_string(f)) return f;
  }
  throw ContractError("unknown noise family '" + std::string(name) + "'");
}

ClampRule parse_clamp_rule(std::string_view name) {
  if (name == "clamp-raw") return ClampRule::kClampRaw;
  if (name == "abs-then-clamp") return ClampRule::kAbsThenClamp;
  throw ContractError("unknown clamp rule '" + std::string(name) + "'");
}

ScheduleMode parse_schedule_mode(std::string_view name) {
  if (name == "constant") return ScheduleMode::kConstant;
  if (name == "temporal") return ScheduleMode::kTemporal;
  throw ContractError("unknown schedule mode '" + std::string(name) + "'");
}

NoiseSpec NoiseSpec::make(NoiseFamily family, double sigma, double alpha, double beta_param,
                          double lambda, ClampRule clamp_rule) {
  NoiseSpec spec{family, sigma, alpha, beta_param, lambda, clamp_rule};
  spec.validate();
  return spec;
}

void NoiseSpec::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  switch (family) {
    case NoiseFamily::kGaussian:
      if (!std::isfinite(sigma) || sigma < 0.0) {
        throw ContractError("gaussian sigma must be finite and >= 0");
      }
      break;
    case NoiseFamily::kBeta:
      if (!positive(alpha) || !positive(beta_param)) {
        throw ContractError("beta family requires alpha > 0 and beta > 0");
      }
      break;
    case NoiseFamily::kExponential:
      if (!positive(lambda)) throw ContractError("exponential family requires lambda > 0");
      break;
    case NoiseFamily::kUniform:
    case NoiseFamily::kNone:
      break;
  }
}

NoiseSpec NoiseSpec::with_sigma(double s) const {
  NoiseSpec out = *this;
  out.sigma = s;
  out.validate();
  return out;
}

SigmaSchedule SigmaSchedule::constant(double sigma0) {
  SigmaSchedule s{ScheduleMode::kConstant, sigma0, 0, 1};
  s.validate();
  return s;
}

SigmaSchedule SigmaSchedule::temporal(double sigma0, std::uint64_t t_mid, std::uint64_t t_end) {
  SigmaSchedule s{ScheduleMode::kTemporal, sigma0, t_mid, t_end};
  s.validate();
  return s;
}

void SigmaSchedule::validate() const {
  if (!std::isfinite(sigma0) || sigma0 < 0.0) throw ContractError("sigma0 must be finite and >= 0");
  if (mode == ScheduleMode::kTemporal && !(t_mid > 0 && t_mid < t_end)) {
    throw ContractError("temporal schedule requires 0 < t_mid < t_end");
  }
}

double sigma_at(const SigmaSchedule& schedule, std::uint64_t t) {
  if (schedule.mode == ScheduleMode::kConstant) return schedule.sigma0;
  if (t > schedule.t_end) {
    throw ContractError("iteration " + std::to_string(t) + " is past t_end " +
                        std::to_string(schedule.t_end));
  }
  if (t == schedule.t_mid) return schedule.sigma0;
  if (t < schedule.t_mid) {
    return schedule.sigma0 * static_cast<double>(t) / static_cast<double>(schedule.t_mid);
  }
  return schedule.sigma0 * static_cast<double>(schedule.t_end - t) /
         static_cast<double>(schedule.t_end - schedule.t_mid);
}

namespace {

double apply_clamp(double x, ClampRule rule) {
  if (rule == ClampRule::kAbsThenClamp) return std::min(1.0, std::abs(x));
  return std::clamp(x, 0.0, 1.0);
}

double beta_quantile(const NoiseSpec& spec, double u) {
  if (spec.alpha == 0.5 && spec.beta_param == 0.5) {
    // Arcsine distribution: closed-form inverse CDF.
    const double s = std::sin(std::numbers::pi * u / 2.0);
    return s * s;
  }
  return boost::math::ibeta_inv(spec.alpha, spec.beta_param, u);
}

// Box-Muller pair from two open-interval uniforms.
std::pair<double, double> standard_normal_pair(Rng& rng) {
  const double u1 = rng.uniform_open();
  const double u2 = rng.uniform_open();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(theta), r * std::sin(theta)};
}

double raw_draw(const NoiseSpec& spec, Rng& rng) {
  switch (spec.family) {
    case NoiseFamily::kGaussian: return spec.sigma * standard_normal_pair(rng).first;
    case NoiseFamily::kUniform: return rng.uniform_open();
    case NoiseFamily::kBeta: return beta_quantile(spec, rng.uniform_open());
    case NoiseFamily::kExponential: return -std::log(rng.uniform_open()) / spec.lambda;
    case NoiseFamily::kNone: return 0.0;
  }
  return 0.0;
}

}  // namespace

double sample_one(const NoiseSpec& spec, Rng& rng) {
  if (spec.family == NoiseFamily::kNone) return 0.0;
  return apply_clamp(raw_draw(spec, rng), spec.clamp_rule);
}

Matrix sample_noise(const NoiseSpec& spec, std::size_t rows, std::size_t cols, Rng& rng) {
  if (rows == 0 || cols == 0) throw ContractError("noise shape must be positive");
  spec.validate();
  Matrix out(rows, cols);
  if (spec.family == NoiseFamily::kNone) return out;
  auto values = out.values();
  if (spec.family == NoiseFamily::kGaussian) {
    // Both Box-Muller outputs are used; they are independent standard normals.
    std::size_t i = 0;
    for (; i + 1 < values.size(); i += 2) {
      const auto [a, b] = standard_normal_pair(rng);
      values[i] = apply_clamp(spec.sigma * a, spec.clamp_rule);
      values[i + 1] = apply_clamp(spec.sigma * b, spec.clamp_rule);
    }
    if (i < values.size()) {
      values[i] = apply_clamp(spec.sigma * standard_normal_pair(rng).first, spec.clamp_rule);
    }
    return out;
  }
  for (double& v : values) v = apply_clamp(raw_draw(spec, rng), spec.clamp_rule);
  return out;
}

double expected_clamped_noise(const NoiseSpec& spec) {
  spec.validate();
  switch (spec.family) {
    case NoiseFamily::kNone: return 0.0;
    case NoiseFamily::kUniform: return 0.5;
    case NoiseFamily::kBeta: return spec.alpha / (spec.alpha + spec.beta_param);
    case NoiseFamily::kExponential:
      // Draws are nonnegative so both clamp rules give E[min(1, X)].
      return -std::expm1(-spec.lambda) / spec.lambda;
    case NoiseFamily::kGaussian: {
      if (spec.sigma == 0.0) return 0.0;
      // E[clamp(X, 0, 1)] = sigma/sqrt(2 pi) (1 - exp(-1/(2 sigma^2))) + P(X > 1)
      const double s = spec.sigma;
      const double body = s / std::sqrt(2.0 * std::numbers::pi) * -std::expm1(-0.5 / (s * s));
      const double upper = 0.5 * std::erfc(1.0 / (s * std::numbers::sqrt2));
      const double one_sided = body + upper;
      return spec.clamp_rule == ClampRule::kClampRaw ? one_sided : 2.0 * one_sided;
    }
  }
  return 0.0;
}

}  // namespace blv
