#include <doctest.h>

#include <cmath>

#include "blv/error.hpp"
#include "blv/loss.hpp"
#include "oracles.hpp"

using namespace blv;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale) {
  Matrix m(r, c);
  for (double& v : m.values()) v = scale * (2.0 * rng.uniform_open() - 1.0);
  return m;
}

}  // namespace

TEST_CASE("softmax") {
  const auto p = softmax(Matrix::from_rows({{0, 0, 0}}));
  for (double v : p.values()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  const auto q = softmax(Matrix::from_rows({{0.0, std::log(2.0)}}));
  CHECK(q(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(q(0, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));

  const auto big = softmax(Matrix::from_rows({{1000, 1000}}));
  CHECK(big(0, 0) == 0.5);
  CHECK(big(0, 1) == 0.5);

  CHECK_THROWS_AS(softmax(Matrix::from_rows({{0.0, std::nan("")}})), ContractError);
}

TEST_CASE("softmax rows sum to one and are shift invariant") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto z = random_matrix(5, 2 + rng.below(6), rng, 30.0);
    const auto p = softmax(z);
    Matrix shifted = z;
    const double c = 100.0 * (2.0 * rng.uniform_open() - 1.0);
    for (double& v : shifted.values()) v += c;
    const auto ps = softmax(shifted);
    for (std::size_t i = 0; i < p.rows(); ++i) {
      double s = 0.0;
      for (double v : p.row(i)) {
        CHECK(v >= 0.0);
        s += v;
      }
      CHECK(std::abs(s - 1.0) <= 1e-12);
    }
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(p.values()[i] - ps.values()[i]) <= 1e-12);
  }
}

TEST_CASE("cross_entropy values and gradient") {
  const auto a = cross_entropy(Matrix::from_rows({{0, 0}}), {{0}, 255});
  CHECK(a.loss == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(a.grad(0, 0) == doctest::Approx(-0.5));
  CHECK(a.grad(0, 1) == doctest::Approx(0.5));
  CHECK(a.valid_count == 1);

  CHECK(cross_entropy(Matrix::from_rows({{50, 0}}), {{0}, 255}).loss < 1e-12);
  CHECK(cross_entropy(Matrix::from_rows({{1, 1, 1, 1}}), {{2}, 255}).loss ==
        doctest::Approx(std::log(4.0)).epsilon(1e-15));

  const auto ign = cross_entropy(Matrix::from_rows({{3, 1}, {0, 2}}), {{255, 1}, 255});
  CHECK(ign.valid_count == 1);
  CHECK(ign.grad(0, 0) == 0.0);
  CHECK(ign.grad(0, 1) == 0.0);

  CHECK_THROWS_AS(cross_entropy(Matrix::from_rows({{0, 0}}), {{255}, 255}), DegenerateInputError);
  CHECK_THROWS_AS(cross_entropy(Matrix::from_rows({{0, 0}}), {{2}, 255}), LabelRangeError);
  CHECK_THROWS_AS(cross_entropy(Matrix::from_rows({{0, 0}}), {{0, 1}, 255}), ContractError);
  CHECK_THROWS_AS(cross_entropy(Matrix::from_rows({{0}}), {{0}, 255}), ContractError);
}

TEST_CASE("perturb_logits per mode") {
  const auto z = Matrix::from_rows({{1.0, 2.0}});
  const BalancingCoefficients c{{0.2, 1.0}, {0.2, 1.0}};
  const auto noise = Matrix::from_rows({{0.5, 0.5}});
  const auto blv = perturb_logits(z, c, noise, LossMode::kBlv);
  CHECK(blv(0, 0) == doctest::Approx(1.1));
  CHECK(blv(0, 1) == doctest::Approx(2.5));
  CHECK(perturb_logits(z, c, noise, LossMode::kPlainCe) == z);

  const auto nb = perturb_logits(Matrix::from_rows({{0, 0}}), BalancingCoefficients::uniform(2),
                                 Matrix::from_rows({{0.3, 0.7}}), LossMode::kNoBalance);
  CHECK(nb(0, 0) == 0.3);
  CHECK(nb(0, 1) == 0.7);

  const auto nv = perturb_logits(z, c, Matrix(), LossMode::kNoVariation, 0.5);
  CHECK(nv(0, 0) == doctest::Approx(1.1));
  CHECK(nv(0, 1) == doctest::Approx(2.5));

  CHECK_THROWS_AS(perturb_logits(z, c, Matrix(2, 2), LossMode::kBlv), ContractError);
  CHECK_THROWS_AS(perturb_logits(z, BalancingCoefficients::uniform(3), noise, LossMode::kBlv),
                  ContractError);
}

TEST_CASE("blv_loss with frozen noise matches a scalar evaluation") {
  const auto out = blv_loss_frozen(Matrix::from_rows({{1.0, 2.0}}), {{1}, 255},
                                   {{0.2, 1.0}, {0.2, 1.0}}, Matrix::from_rows({{0.5, 0.5}}),
                                   LossMode::kBlv, 0.0, true);
  const long double oracle = testing::scalar_ce({1.1L, 2.5L}, 1);
  CHECK(out.loss == doctest::Approx(static_cast<double>(oracle)).epsilon(1e-14));
  CHECK(out.loss == doctest::Approx(0.2204174099184509).epsilon(1e-12));
  REQUIRE(out.perturbed_logits);
  CHECK((*out.perturbed_logits)(0, 1) == doctest::Approx(2.5));
}

TEST_CASE("blv_loss with the none family reduces to cross-entropy") {
  Rng data(5);
  for (auto mode : {LossMode::kPlainCe, LossMode::kBlv, LossMode::kNoBalance}) {
    const auto z = random_matrix(6, 4, data, 3.0);
    const LabelBatch y{{0, 1, 2, 3, 255, 1}, 255};
    Rng rng(1);
    const auto out = blv_loss(z, y, {{0.1, 0.3, 0.6, 1.0}, {}}, NoiseSpec::none(),
                              SigmaSchedule::constant(6.0), 0, mode, rng);
    const auto ce = cross_entropy(z, y);
    CHECK(out.loss == ce.loss);
    CHECK(out.grad == ce.grad);
  }
  Rng rng(1);
  CHECK_THROWS_AS(blv_loss(Matrix::from_rows({{0, 0}}), {{255}, 255}, BalancingCoefficients::uniform(2),
                           NoiseSpec::none(), SigmaSchedule::constant(6), 0, LossMode::kBlv, rng),
                  DegenerateInputError);
}

TEST_CASE("blv_loss resolves sigma from the schedule") {
  // At t=0 a temporal schedule has sigma 0, so gaussian noise is all zero.
  const auto z = Matrix::from_rows({{0.3, -0.2, 1.0}});
  const LabelBatch y{{2}, 255};
  Rng rng(3);
  const auto out = blv_loss(z, y, BalancingCoefficients::uniform(3), NoiseSpec::make(NoiseFamily::kGaussian),
                            SigmaSchedule::temporal(6.0, 10, 20), 0, LossMode::kBlv, rng, {KappaRule::kExpectedNoise, true});
  CHECK(*out.perturbed_logits == z);
  CHECK(rng.draws() == 4);  // two Box-Muller pairs cover a row of three
}

TEST_CASE("plain-ce and no-variation consume no noise draws") {
  const auto z = Matrix::from_rows({{0.3, -0.2}});
  Rng rng(3);
  blv_loss(z, {{0}, 255}, BalancingCoefficients::uniform(2), NoiseSpec::make(NoiseFamily::kGaussian),
           SigmaSchedule::constant(6), 0, LossMode::kPlainCe, rng);
  blv_loss(z, {{0}, 255}, BalancingCoefficients::uniform(2), NoiseSpec::make(NoiseFamily::kGaussian),
           SigmaSchedule::constant(6), 0, LossMode::kNoVariation, rng);
  CHECK(rng.draws() == 0);
}

TEST_CASE("kappa rules") {
  const auto g = NoiseSpec::make(NoiseFamily::kGaussian, 6.0);
  CHECK(kappa_for(g, KappaRule::kExpectedNoise) == doctest::Approx(0.4668315531860532).epsilon(1e-12));
  CHECK(kappa_for(g, KappaRule::kUnit) == 1.0);
}

TEST_CASE("property: gradient rows sum to zero and loss grows when the target gets the smallest push") {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(8), c = 2 + rng.below(5);
    const auto z = random_matrix(n, c, rng, 4.0);
    LabelBatch y{{}, 255};
    for (std::size_t i = 0; i < n; ++i) y.labels.push_back(rng.below(4) == 0 ? 255 : int(rng.below(c)));
    if (std::all_of(y.labels.begin(), y.labels.end(), [](int v) { return v == 255; })) y.labels[0] = 0;
    Matrix noise(n, c);
    for (std::size_t i = 0; i < n; ++i) {
      const double floor = rng.uniform_open();
      for (std::size_t k = 0; k < c; ++k) {
        // Target receives the smallest perturbation in its row.
        noise(i, k) = (y.labels[i] == int(k)) ? floor * 0.5 : 0.5 * floor + 0.5 * rng.uniform_open();
      }
    }
    const auto coeffs = BalancingCoefficients::uniform(c);
    const auto out = blv_loss_frozen(z, y, coeffs, noise, LossMode::kNoBalance, 0.0, true);
    const auto base = cross_entropy(z, y);
    CHECK(out.loss >= base.loss - 1e-15);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (double v : out.grad.row(i)) s += v;
      CHECK(std::abs(s) <= 1e-9);
      for (std::size_t k = 0; k < c; ++k) CHECK((*out.perturbed_logits)(i, k) >= z(i, k));
    }
  }
}

TEST_CASE("analytic logit gradient matches central differences in every mode") {
  Rng rng(8);
  for (auto rule : {ClampRule::kClampRaw, ClampRule::kAbsThenClamp}) {
    for (auto mode : {LossMode::kPlainCe, LossMode::kBlv, LossMode::kNoVariation, LossMode::kNoBalance}) {
      const std::size_t n = 1 + rng.below(8), c = 2 + rng.below(5);
      Matrix z = random_matrix(n, c, rng, 3.0);
      LabelBatch y{{}, 255};
      for (std::size_t i = 0; i < n; ++i) y.labels.push_back(int(rng.below(c)));
      const auto spec = NoiseSpec::make(NoiseFamily::kGaussian, 2.0, 0.5, 0.5, 1.0, rule);
      const Matrix noise = sample_noise(spec, n, c, rng);
      BalancingCoefficients coeffs;
      for (std::size_t k = 0; k < c; ++k) coeffs.coeffs.push_back(0.1 + 0.9 * rng.uniform_open());
      const double kappa = expected_clamped_noise(spec);

      const auto out = blv_loss_frozen(z, y, coeffs, noise, mode, kappa);
      double worst = 0.0;
      for (std::size_t j = 0; j < z.size(); ++j) {
        const double fd = testing::central_difference(
            [&] { return blv_loss_frozen(z, y, coeffs, noise, mode, kappa).loss; }, z.values()[j], 1e-6);
        worst = std::max(worst, testing::relative_error(out.grad.values()[j], fd));
      }
      CHECK(worst <= 1e-6);
    }
  }
}
