#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "blv/labels.hpp"

namespace blv {

/// cells[g][p]: rows are ground truth, columns are predictions.
struct ConfusionMatrix {
  std::size_t num_classes = 0;
  std::vector<std::uint64_t> cells;  // row-major C x C
  std::uint64_t ignored = 0;

  explicit ConfusionMatrix(std::size_t c = 0) : num_classes(c), cells(c * c, 0) {}

  std::uint64_t& at(std::size_t gt, std::size_t pred) { return cells[gt * num_classes + pred]; }
  std::uint64_t at(std::size_t gt, std::size_t pred) const { return cells[gt * num_classes + pred]; }
  std::uint64_t total() const noexcept;

  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Classes whose IoU denominator is zero (absent from both ground truth and
/// predictions) have no value and are left out of every mean.
struct MetricsReport {
  std::vector<std::optional<double>> per_class_iou;
  std::vector<std::optional<double>> per_class_recall;
  double miou = 0.0;
  std::optional<double> tail_miou;
  std::vector<std::size_t> tail_classes;
};

/// Ground-truth instances equal to the ignore index are counted in
/// `ignored` and skipped. Predictions must be valid classes.
ConfusionMatrix confusion(const LabelBatch& pred, const LabelBatch& gt, std::size_t num_classes);

/// Throws DegenerateInputError if no class has a defined IoU.
MetricsReport iou_report(const ConfusionMatrix& cm, std::span<const std::size_t> tail_classes);

}  // namespace blv
