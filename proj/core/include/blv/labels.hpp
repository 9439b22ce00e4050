#pragma once

#include <cstdint>
#include <vector>

namespace blv {

inline constexpr int kDefaultIgnoreIndex = 255;

/// Integer class labels for N instances. Values outside [0, C) must equal
/// `ignore_index`; the class count is supplied by whoever consumes the batch.
struct LabelBatch {
  std::vector<int> labels;
  int ignore_index = kDefaultIgnoreIndex;

  std::size_t size() const noexcept { return labels.size(); }
  bool is_ignored(std::size_t i) const noexcept { return labels[i] == ignore_index; }

  friend bool operator==(const LabelBatch&, const LabelBatch&) = default;
};

/// Throws LabelRangeError on the first label that is neither in [0, C)
/// nor the ignore index.
void validate_labels(const LabelBatch& batch, std::size_t num_classes);

}  // namespace blv
