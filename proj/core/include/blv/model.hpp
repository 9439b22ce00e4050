#pragma once

#include <optional>
#include <span>
#include <vector>

#include "blv/labels.hpp"
#include "blv/matrix.hpp"
#include "blv/rng.hpp"

namespace blv {

/// Affine map x -> x W + b; W is in_dims x out_dims.
struct DenseLayer {
  Matrix weight;
  std::vector<double> bias;

  DenseLayer() = default;
  DenseLayer(std::size_t in, std::size_t out) : weight(in, out), bias(out, 0.0) {}

  std::size_t in_dims() const noexcept { return weight.rows(); }
  std::size_t out_dims() const noexcept { return weight.cols(); }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Softmax classifier: a linear head, optionally preceded by one tanh layer.
struct Model {
  std::optional<DenseLayer> hidden;
  DenseLayer head;

  std::size_t input_dims() const noexcept { return hidden ? hidden->in_dims() : head.in_dims(); }
  std::size_t num_classes() const noexcept { return head.out_dims(); }

  /// Zero-initialized linear model.
  static Model linear(std::size_t dims, std::size_t classes);
  /// tanh hidden layer of `hidden_units`, weights ~ N(0, 1/fan_in); head zero.
  static Model with_hidden(std::size_t dims, std::size_t hidden_units, std::size_t classes, Rng& rng);

  /// Parameter blocks in a fixed order; same layout as the matching
  /// gradient struct.
  std::vector<std::span<double>> parameters();
  std::vector<std::span<const double>> parameters() const;
  std::size_t parameter_count() const;

  friend bool operator==(const Model&, const Model&) = default;
};

/// Gradients share Model's shape.
using ModelGrads = Model;

/// Zero gradients shaped like `model`.
ModelGrads zeros_like(const Model& model);

/// Noise-free logits. Pure: no generator is involved on this path.
Matrix forward(const Model& model, const Matrix& features);

/// Argmax of forward(); lowest index wins ties.
LabelBatch predict(const Model& model, const Matrix& features,
                   int ignore_index = kDefaultIgnoreIndex);

/// Backpropagates d loss / d logits through the network. `loss_grad` is
/// already scaled (e.g. divided by the valid count), so the result is the
/// gradient of the same scalar loss.
ModelGrads backward(const Model& model, const Matrix& features, const Matrix& loss_grad);

/// Heavy-ball SGD: v <- momentum v + g; theta <- theta - lr v.
void sgd_step(Model& model, const ModelGrads& grads, double lr, double momentum,
              ModelGrads& velocity);

}  // namespace blv
