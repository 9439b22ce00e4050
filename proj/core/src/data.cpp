#include "blv/data.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "blv/error.hpp"
#include "blv/rng.hpp"

namespace blv {

void BlobSpec::validate() const {
  if (num_classes < 2) throw ContractError("blob spec needs at least two classes");
  if (dims < 2) throw ContractError("blob spec needs dims >= 2");
  if (counts.size() != num_classes) throw ContractError("counts length must equal num_classes");
  if (means.size() != num_classes) throw ContractError("means length must equal num_classes");
  for (std::size_t k = 0; k < num_classes; ++k) {
    if (counts[k] == 0) throw ContractError("class " + std::to_string(k) + " has zero samples");
    if (means[k].size() != dims) {
      throw ContractError("mean of class " + std::to_string(k) + " has wrong dimension");
    }
    for (double v : means[k]) {
      if (!std::isfinite(v)) throw ContractError("non-finite class mean");
    }
  }
  if (!std::isfinite(stddev) || stddev < 0.0) throw ContractError("stddev must be >= 0");
  if (stddev == 0.0) {
    for (std::size_t a = 0; a < num_classes; ++a) {
      for (std::size_t b = a + 1; b < num_classes; ++b) {
        if (means[a] == means[b]) {
          throw ContractError("classes " + std::to_string(a) + " and " + std::to_string(b) +
                              " share a mean with zero stddev");
        }
      }
    }
  }
}

std::vector<std::vector<double>> unit_circle_means(std::size_t num_classes, std::size_t dims) {
  std::vector<std::vector<double>> means(num_classes, std::vector<double>(dims, 0.0));
  for (std::size_t k = 0; k < num_classes; ++k) {
    const double deg = 90.0 + 360.0 * static_cast<double>(k) / static_cast<double>(num_classes);
    const double rad = deg * std::numbers::pi / 180.0;
    means[k][0] = std::cos(rad);
    means[k][1] = std::sin(rad);
  }
  return means;
}

BlobSpec default_longtail_spec(std::uint64_t seed) {
  BlobSpec spec;
  spec.num_classes = 3;
  spec.dims = 2;
  spec.counts = {2000, 200, 20};
  spec.means = unit_circle_means(3, 2);
  spec.stddev = 0.9;
  spec.seed = seed;
  return spec;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.num_classes = num_classes;
  out.features = gather_rows(features, indices);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) out.labels.push_back(labels[i]);
  return out;
}

Dataset concat(const Dataset& a, const Dataset& b) {
  if (a.size() == 0) return b;
  if (b.size() == 0) return a;
  if (a.features.cols() != b.features.cols() || a.num_classes != b.num_classes) {
    throw ContractError("cannot concatenate datasets with different shapes");
  }
  const std::size_t dims = a.features.cols();
  std::vector<double> values(a.features.values().begin(), a.features.values().end());
  values.insert(values.end(), b.features.values().begin(), b.features.values().end());
  Dataset out;
  out.num_classes = a.num_classes;
  out.features = Matrix(a.size() + b.size(), dims, std::move(values));
  out.labels = a.labels;
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  return out;
}

Dataset generate_longtail_blobs(const BlobSpec& spec) {
  spec.validate();
  const std::size_t total = std::accumulate(spec.counts.begin(), spec.counts.end(), std::size_t{0});
  Dataset ds;
  ds.num_classes = spec.num_classes;
  ds.features = Matrix(total, spec.dims);
  ds.labels.reserve(total);

  std::size_t row = 0;
  for (std::size_t k = 0; k < spec.num_classes; ++k) {
    Rng rng(derive_seed(spec.seed, k));
    for (std::size_t n = 0; n < spec.counts[k]; ++n, ++row) {
      auto x = ds.features.row(row);
      for (std::size_t d = 0; d < spec.dims; ++d) {
        // Box-Muller, cosine branch only; one normal per two uniforms.
        const double u1 = rng.uniform_open();
        const double u2 = rng.uniform_open();
        const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
        x[d] = spec.means[k][d] + spec.stddev * z;
      }
      ds.labels.push_back(static_cast<int>(k));
    }
  }
  return ds;
}

Split split_labeled_unlabeled(const Dataset& ds, const SplitSpec& split) {
  if (!(split.labeled_fraction > 0.0 && split.labeled_fraction <= 1.0)) {
    throw ContractError("labeled_fraction must lie in (0, 1]");
  }
  const std::size_t n = ds.size();
  if (n == 0) throw ContractError("cannot split an empty dataset");
  std::size_t n_labeled =
      static_cast<std::size_t>(std::llround(split.labeled_fraction * static_cast<double>(n)));
  n_labeled = std::clamp<std::size_t>(n_labeled, 1, n);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(split.seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::swap(order[i], order[rng.below(i + 1)]);
  }

  Split out;
  out.labeled_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_labeled));
  out.unlabeled_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(n_labeled), order.end());
  std::sort(out.labeled_indices.begin(), out.labeled_indices.end());
  std::sort(out.unlabeled_indices.begin(), out.unlabeled_indices.end());
  out.labeled = ds.subset(out.labeled_indices);
  out.unlabeled = ds.subset(out.unlabeled_indices);
  return out;
}

}  // namespace blv
