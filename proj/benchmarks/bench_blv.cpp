#include <benchmark/benchmark.h>

#include "blv/data.hpp"
#include "blv/histogram.hpp"
#include "blv/loss.hpp"
#include "blv/model.hpp"
#include "blv/rng.hpp"
#include "blv/variation.hpp"

using namespace blv;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = 4.0 * rng.uniform_open() - 2.0;
  return m;
}

LabelBatch random_labels(std::size_t rows, std::size_t classes, Rng& rng) {
  LabelBatch batch;
  for (std::size_t i = 0; i < rows; ++i) batch.labels.push_back(static_cast<int>(rng.below(classes)));
  return batch;
}

BalancingCoefficients skewed_coefficients(std::size_t classes) {
  FrequencyVector q;
  for (std::size_t k = 0; k < classes; ++k) q.freqs.push_back(1.0 / static_cast<double>(1 + k * k));
  return balancing_coefficients(q);
}

void BM_SampleNoise(benchmark::State& state) {
  const auto family = static_cast<NoiseFamily>(state.range(0));
  NoiseSpec spec = NoiseSpec::make(family, 6.0);
  Rng rng(1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_noise(spec, 256, 19, rng));
  }
  state.SetItemsProcessed(state.iterations() * 256 * 19);
  state.SetLabel(std::string(to_string(family)));
}
BENCHMARK(BM_SampleNoise)->DenseRange(0, 3);

void BM_BlvLoss(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const std::size_t classes = 19;
  Rng rng(2);
  const Matrix z = random_matrix(rows, classes, rng);
  const LabelBatch y = random_labels(rows, classes, rng);
  const auto coeffs = skewed_coefficients(classes);
  const NoiseSpec spec = NoiseSpec::make(NoiseFamily::kGaussian, 6.0);
  const auto schedule = SigmaSchedule::constant(6.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(blv_loss(z, y, coeffs, spec, schedule, 0, LossMode::kBlv, rng));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows));
}
BENCHMARK(BM_BlvLoss)->Arg(64)->Arg(1024)->Arg(16384);

void BM_CrossEntropy(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  const Matrix z = random_matrix(rows, 19, rng);
  const LabelBatch y = random_labels(rows, 19, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(cross_entropy(z, y));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows));
}
BENCHMARK(BM_CrossEntropy)->Arg(64)->Arg(1024)->Arg(16384);

void BM_ForwardBackward(benchmark::State& state) {
  const auto hidden = static_cast<std::size_t>(state.range(0));
  Rng rng(4);
  const Model model = hidden == 0 ? Model::linear(2, 3) : Model::with_hidden(2, hidden, 3, rng);
  const Matrix x = random_matrix(64, 2, rng);
  const LabelBatch y = random_labels(64, 3, rng);
  for (auto _ : state) {
    const auto out = cross_entropy(forward(model, x), y);
    benchmark::DoNotOptimize(backward(model, x, out.grad));
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(0)->Arg(16)->Arg(128);

void BM_PseudoLabelFrequencies(benchmark::State& state) {
  Rng rng(5);
  std::vector<LabelBatch> maps;
  for (int i = 0; i < 8; ++i) maps.push_back(random_labels(512 * 256, 19, rng));
  for (auto _ : state) {
    benchmark::DoNotOptimize(update_from_pseudo_labels(maps, 19, 1.0));
  }
  state.SetItemsProcessed(state.iterations() * 8 * 512 * 256);
}
BENCHMARK(BM_PseudoLabelFrequencies);

}  // namespace

BENCHMARK_MAIN();
