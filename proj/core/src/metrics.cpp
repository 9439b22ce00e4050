#include "blv/metrics.hpp"

#include <numeric>

#include "blv/error.hpp"

namespace blv {

std::uint64_t ConfusionMatrix::total() const noexcept {
  return std::accumulate(cells.begin(), cells.end(), std::uint64_t{0});
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.num_classes != num_classes) throw ContractError("confusion matrix size mismatch");
  for (std::size_t i = 0; i < cells.size(); ++i) cells[i] += other.cells[i];
  ignored += other.ignored;
  return *this;
}

ConfusionMatrix confusion(const LabelBatch& pred, const LabelBatch& gt, std::size_t num_classes) {
  if (pred.size() != gt.size()) {
    throw ContractError("prediction length " + std::to_string(pred.size()) +
                        " differs from ground-truth length " + std::to_string(gt.size()));
  }
  if (num_classes < 2) throw ContractError("confusion matrix needs at least two classes");
  ConfusionMatrix cm(num_classes);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt.is_ignored(i)) {
      ++cm.ignored;
      continue;
    }
    const int g = gt.labels[i];
    const int p = pred.labels[i];
    if (g < 0 || static_cast<std::size_t>(g) >= num_classes) throw LabelRangeError(i, g, num_classes);
    if (p < 0 || static_cast<std::size_t>(p) >= num_classes) throw LabelRangeError(i, p, num_classes);
    ++cm.at(static_cast<std::size_t>(g), static_cast<std::size_t>(p));
  }
  return cm;
}

MetricsReport iou_report(const ConfusionMatrix& cm, std::span<const std::size_t> tail_classes) {
  const std::size_t c = cm.num_classes;
  if (c < 2) throw ContractError("iou_report needs at least two classes");
  MetricsReport report;
  report.per_class_iou.resize(c);
  report.per_class_recall.resize(c);
  report.tail_classes.assign(tail_classes.begin(), tail_classes.end());

  double sum = 0.0;
  std::size_t defined = 0;
  for (std::size_t k = 0; k < c; ++k) {
    std::uint64_t row = 0;
    std::uint64_t col = 0;
    for (std::size_t j = 0; j < c; ++j) {
      row += cm.at(k, j);
      col += cm.at(j, k);
    }
    const std::uint64_t tp = cm.at(k, k);
    const std::uint64_t fn = row - tp;
    const std::uint64_t fp = col - tp;
    const std::uint64_t denom = tp + fp + fn;
    if (denom > 0) {
      const double iou = static_cast<double>(tp) / static_cast<double>(denom);
      report.per_class_iou[k] = iou;
      sum += iou;
      ++defined;
    }
    if (row > 0) report.per_class_recall[k] = static_cast<double>(tp) / static_cast<double>(row);
  }
  if (defined == 0) throw DegenerateInputError("no class has a defined IoU");
  report.miou = sum / static_cast<double>(defined);

  double tail_sum = 0.0;
  std::size_t tail_defined = 0;
  for (std::size_t k : tail_classes) {
    if (k >= c) throw ContractError("tail class " + std::to_string(k) + " is out of range");
    if (report.per_class_iou[k]) {
      tail_sum += *report.per_class_iou[k];
      ++tail_defined;
    }
  }
  if (tail_defined > 0) report.tail_miou = tail_sum / static_cast<double>(tail_defined);
  return report;
}

}  // namespace blv
