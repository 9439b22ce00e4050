#include "blv/histogram.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "blv/error.hpp"

namespace blv {

void validate_labels(const LabelBatch& batch, std::size_t num_classes) {
  for (std::size_t i = 0; i < batch.labels.size(); ++i) {
    const int v = batch.labels[i];
    if (v == batch.ignore_index) continue;
    if (v < 0 || static_cast<std::size_t>(v) >= num_classes) {
      throw LabelRangeError(i, v, num_classes);
    }
  }
}

std::uint64_t ClassHistogram::counted() const noexcept {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

ClassHistogram& ClassHistogram::operator+=(const ClassHistogram& other) {
  if (other.counts.size() != counts.size()) {
    throw ContractError("cannot add histograms with different class counts");
  }
  for (std::size_t k = 0; k < counts.size(); ++k) counts[k] += other.counts[k];
  ignored += other.ignored;
  return *this;
}

BalancingCoefficients BalancingCoefficients::uniform(std::size_t num_classes) {
  return {std::vector<double>(num_classes, 1.0), std::vector<double>(num_classes, 1.0)};
}

ClassHistogram count_pixels(const LabelBatch& labels, std::size_t num_classes) {
  if (num_classes == 0) throw ContractError("num_classes must be positive");
  ClassHistogram hist(num_classes);
  for (std::size_t i = 0; i < labels.labels.size(); ++i) {
    const int v = labels.labels[i];
    if (v == labels.ignore_index) {
      ++hist.ignored;
    } else if (v >= 0 && static_cast<std::size_t>(v) < num_classes) {
      ++hist.counts[static_cast<std::size_t>(v)];
    } else {
      throw LabelRangeError(i, v, num_classes);
    }
  }
  return hist;
}

FrequencyVector normalize(const ClassHistogram& hist, double smoothing) {
  if (!(smoothing >= 0.0) || !std::isfinite(smoothing)) {
    throw ContractError("smoothing must be a finite nonnegative number");
  }
  const std::size_t c = hist.num_classes();
  if (c == 0) throw ContractError("histogram has no classes");
  const std::uint64_t counted = hist.counted();
  if (counted == 0 && smoothing == 0.0) {
    throw DegenerateInputError("histogram is empty and smoothing is zero");
  }
  // Counts are summed as integers; the only rounding is the final division.
  const double denom = static_cast<double>(counted) + static_cast<double>(c) * smoothing;
  FrequencyVector out;
  out.freqs.resize(c);
  for (std::size_t k = 0; k < c; ++k) {
    out.freqs[k] = (static_cast<double>(hist.counts[k]) + smoothing) / denom;
  }
  return out;
}

FrequencyVector update_from_pseudo_labels(std::span<const LabelBatch> pseudo_label_batches,
                                          std::size_t num_classes, double smoothing) {
  ClassHistogram total(num_classes);
  for (const auto& batch : pseudo_label_batches) total += count_pixels(batch, num_classes);
  return normalize(total, smoothing);
}

BalancingCoefficients balancing_coefficients(const FrequencyVector& freqs) {
  const std::size_t c = freqs.num_classes();
  if (c == 0) throw ContractError("frequency vector is empty");
  BalancingCoefficients out;
  out.raw.resize(c);
  for (std::size_t k = 0; k < c; ++k) {
    const double q = freqs.freqs[k];
    if (!(q > 0.0) || !std::isfinite(q)) {
      throw ContractError("frequency of class " + std::to_string(k) +
                          " must be strictly positive; smooth the histogram first");
    }
    out.raw[k] = -std::log(q);
  }
  const double top = *std::max_element(out.raw.begin(), out.raw.end());
  out.coeffs.resize(c);
  if (top <= 0.0) {
    // A single class carries all the mass (q == 1); nothing to rebalance.
    std::fill(out.coeffs.begin(), out.coeffs.end(), 1.0);
    return out;
  }
  for (std::size_t k = 0; k < c; ++k) out.coeffs[k] = out.raw[k] / top;
  // Uniform frequencies land on 1 exactly through x / x; pin the arg-max
  // anyway so the rarest class is always exactly 1.
  const auto argmax = static_cast<std::size_t>(
      std::max_element(out.raw.begin(), out.raw.end()) - out.raw.begin());
  out.coeffs[argmax] = 1.0;
  return out;
}

std::vector<std::size_t> tail_ranking(const FrequencyVector& freqs) {
  std::vector<std::size_t> order(freqs.num_classes());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return freqs.freqs[a] < freqs.freqs[b];
  });
  return order;
}

}  // namespace blv
