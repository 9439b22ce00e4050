#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "blv/labels.hpp"
#include "blv/matrix.hpp"

namespace blv {

/// Isotropic Gaussian clusters with per-class sample counts.
struct BlobSpec {
  std::size_t num_classes = 3;
  std::size_t dims = 2;
  std::vector<std::size_t> counts;
  std::vector<std::vector<double>> means;
  double stddev = 0.9;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Means spread over the unit circle at 90 + 360 k / C degrees (the first
/// two coordinates; the rest are zero). For C = 3 this is 90/210/330.
std::vector<std::vector<double>> unit_circle_means(std::size_t num_classes, std::size_t dims);

/// The reference long-tail scenario: three overlapping classes with
/// 2000/200/20 samples.
BlobSpec default_longtail_spec(std::uint64_t seed = 0);

struct Dataset {
  Matrix features;  // N x dims
  std::vector<int> labels;
  std::size_t num_classes = 0;

  std::size_t size() const noexcept { return labels.size(); }
  LabelBatch label_batch(int ignore_index = kDefaultIgnoreIndex) const {
    return {labels, ignore_index};
  }
  Dataset subset(std::span<const std::size_t> indices) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Concatenates rows; both sides must share dims and class count.
Dataset concat(const Dataset& a, const Dataset& b);

/// Class k contributes exactly counts[k] rows, emitted in class order.
/// Each class draws from its own derived stream so generation is
/// independent per class.
Dataset generate_longtail_blobs(const BlobSpec& spec);

struct SplitSpec {
  double labeled_fraction = 1.0;
  std::uint64_t seed = 0;
};

struct Split {
  Dataset labeled;
  Dataset unlabeled;
  std::vector<std::size_t> labeled_indices;
  std::vector<std::size_t> unlabeled_indices;
};

/// Uniform random (unstratified) partition; the labeled side gets
/// round(fraction * N) rows, at least one.
Split split_labeled_unlabeled(const Dataset& ds, const SplitSpec& split);

}  // namespace blv
