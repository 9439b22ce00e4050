#include "blv/model.hpp"

#include <cmath>
#include <numbers>

#include "blv/error.hpp"

namespace blv {

Model Model::linear(std::size_t dims, std::size_t classes) {
  if (dims == 0 || classes < 2) throw ContractError("model needs dims > 0 and >= 2 classes");
  Model m;
  m.head = DenseLayer(dims, classes);
  return m;
}

Model Model::with_hidden(std::size_t dims, std::size_t hidden_units, std::size_t classes,
                         Rng& rng) {
  if (hidden_units == 0) return linear(dims, classes);
  Model m = linear(hidden_units, classes);
  m.hidden = DenseLayer(dims, hidden_units);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dims));
  for (double& w : m.hidden->weight.values()) {
    const double u1 = rng.uniform_open();
    const double u2 = rng.uniform_open();
    w = scale * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  return m;
}

std::vector<std::span<double>> Model::parameters() {
  std::vector<std::span<double>> blocks;
  if (hidden) {
    blocks.push_back(hidden->weight.values());
    blocks.push_back(hidden->bias);
  }
  blocks.push_back(head.weight.values());
  blocks.push_back(head.bias);
  return blocks;
}

std::vector<std::span<const double>> Model::parameters() const {
  std::vector<std::span<const double>> blocks;
  if (hidden) {
    blocks.push_back(hidden->weight.values());
    blocks.push_back(hidden->bias);
  }
  blocks.push_back(head.weight.values());
  blocks.push_back(head.bias);
  return blocks;
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (auto b : parameters()) n += b.size();
  return n;
}

ModelGrads zeros_like(const Model& model) {
  ModelGrads g;
  if (model.hidden) g.hidden = DenseLayer(model.hidden->in_dims(), model.hidden->out_dims());
  g.head = DenseLayer(model.head.in_dims(), model.head.out_dims());
  return g;
}

namespace {

Matrix affine(const DenseLayer& layer, const Matrix& x) {
  Matrix out(x.rows(), layer.out_dims());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto xi = x.row(i);
    auto oi = out.row(i);
    for (std::size_t o = 0; o < oi.size(); ++o) oi[o] = layer.bias[o];
    for (std::size_t d = 0; d < xi.size(); ++d) {
      const double xd = xi[d];
      const auto wd = layer.weight.row(d);
      for (std::size_t o = 0; o < oi.size(); ++o) oi[o] += xd * wd[o];
    }
  }
  return out;
}

void tanh_inplace(Matrix& m) {
  for (double& v : m.values()) v = std::tanh(v);
}

// Accumulates dW = x^T g, db = colsum(g) into `grad`.
void accumulate_affine_grads(const Matrix& x, const Matrix& g, DenseLayer& grad) {
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto xi = x.row(i);
    const auto gi = g.row(i);
    for (std::size_t o = 0; o < gi.size(); ++o) grad.bias[o] += gi[o];
    for (std::size_t d = 0; d < xi.size(); ++d) {
      auto wd = grad.weight.row(d);
      for (std::size_t o = 0; o < gi.size(); ++o) wd[o] += xi[d] * gi[o];
    }
  }
}

void check_features(const Model& model, const Matrix& features) {
  if (features.cols() != model.input_dims()) {
    throw ContractError("feature dimension " + std::to_string(features.cols()) +
                        " does not match model input " + std::to_string(model.input_dims()));
  }
}

}  // namespace

Matrix forward(const Model& model, const Matrix& features) {
  check_features(model, features);
  if (!model.hidden) return affine(model.head, features);
  Matrix h = affine(*model.hidden, features);
  tanh_inplace(h);
  return affine(model.head, h);
}

LabelBatch predict(const Model& model, const Matrix& features, int ignore_index) {
  const Matrix logits = forward(model, features);
  LabelBatch out;
  out.ignore_index = ignore_index;
  out.labels.resize(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto z = logits.row(i);
    std::size_t best = 0;
    for (std::size_t k = 1; k < z.size(); ++k) {
      if (z[k] > z[best]) best = k;
    }
    out.labels[i] = static_cast<int>(best);
  }
  return out;
}

ModelGrads backward(const Model& model, const Matrix& features, const Matrix& loss_grad) {
  check_features(model, features);
  if (loss_grad.rows() != features.rows() || loss_grad.cols() != model.num_classes()) {
    throw ContractError("loss gradient shape does not match batch size x classes");
  }
  ModelGrads grads = zeros_like(model);
  if (!model.hidden) {
    accumulate_affine_grads(features, loss_grad, grads.head);
    return grads;
  }
  Matrix h = affine(*model.hidden, features);
  tanh_inplace(h);
  accumulate_affine_grads(h, loss_grad, grads.head);

  // d/dh = g W_head^T, then through tanh: (1 - h^2).
  const std::size_t units = model.hidden->out_dims();
  Matrix dpre(features.rows(), units);
  for (std::size_t i = 0; i < features.rows(); ++i) {
    const auto gi = loss_grad.row(i);
    for (std::size_t u = 0; u < units; ++u) {
      const auto wu = model.head.weight.row(u);
      double acc = 0.0;
      for (std::size_t k = 0; k < gi.size(); ++k) acc += gi[k] * wu[k];
      const double hu = h(i, u);
      dpre(i, u) = acc * (1.0 - hu * hu);
    }
  }
  accumulate_affine_grads(features, dpre, *grads.hidden);
  return grads;
}

void sgd_step(Model& model, const ModelGrads& grads, double lr, double momentum,
              ModelGrads& velocity) {
  if (!(lr >= 0.0)) throw ContractError("learning rate must be >= 0");
  auto params = model.parameters();
  const auto g = grads.parameters();
  auto v = velocity.parameters();
  if (params.size() != g.size() || params.size() != v.size()) {
    throw ContractError("gradient layout does not match model");
  }
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (params[b].size() != g[b].size() || params[b].size() != v[b].size()) {
      throw ContractError("gradient block size does not match model");
    }
    for (std::size_t j = 0; j < params[b].size(); ++j) {
      v[b][j] = momentum * v[b][j] + g[b][j];
      params[b][j] -= lr * v[b][j];
    }
  }
}

}  // namespace blv
