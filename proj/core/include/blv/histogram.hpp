#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "blv/labels.hpp"

namespace blv {

/// Per-class instance counts plus the number of instances skipped through
/// the ignore index.
struct ClassHistogram {
  std::vector<std::uint64_t> counts;
  std::uint64_t ignored = 0;

  explicit ClassHistogram(std::size_t num_classes = 0) : counts(num_classes, 0) {}

  std::size_t num_classes() const noexcept { return counts.size(); }
  std::uint64_t counted() const noexcept;
  std::uint64_t total() const noexcept { return counted() + ignored; }

  ClassHistogram& operator+=(const ClassHistogram& other);

  friend bool operator==(const ClassHistogram&, const ClassHistogram&) = default;
};

/// Normalized class frequencies; entries in [0, 1] summing to one.
struct FrequencyVector {
  std::vector<double> freqs;

  std::size_t num_classes() const noexcept { return freqs.size(); }
  friend bool operator==(const FrequencyVector&, const FrequencyVector&) = default;
};

/// `raw[k] = ln(1 / q_k)` and `coeffs[k] = raw[k] / max raw`. The rarest
/// class always maps to exactly 1.
struct BalancingCoefficients {
  std::vector<double> coeffs;
  std::vector<double> raw;

  std::size_t num_classes() const noexcept { return coeffs.size(); }

  /// All-ones coefficients; what the no-balance ablation feeds the loss.
  static BalancingCoefficients uniform(std::size_t num_classes);
};

inline constexpr double kDefaultSmoothing = 1.0;

ClassHistogram count_pixels(const LabelBatch& labels, std::size_t num_classes);

/// `(counts[k] + smoothing) / (sum + C * smoothing)`. Throws
/// DegenerateInputError when nothing was counted and smoothing is zero.
FrequencyVector normalize(const ClassHistogram& hist, double smoothing = kDefaultSmoothing);

/// Eq. 4 style estimate from the current pseudo-labels: the pooled
/// histogram of every batch, normalized.
FrequencyVector update_from_pseudo_labels(std::span<const LabelBatch> pseudo_label_batches,
                                          std::size_t num_classes,
                                          double smoothing = kDefaultSmoothing);

/// Requires strictly positive frequencies; callers smooth first.
BalancingCoefficients balancing_coefficients(const FrequencyVector& freqs);

/// Class indices ordered rarest first (ties broken by index).
std::vector<std::size_t> tail_ranking(const FrequencyVector& freqs);

}  // namespace blv
