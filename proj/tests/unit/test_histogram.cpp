#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "blv/error.hpp"
#include "blv/histogram.hpp"
#include "blv/rng.hpp"

using namespace blv;

TEST_CASE("count_pixels tallies classes and the ignore index") {
  const auto h = count_pixels({{0, 1, 1, 255}, 255}, 2);
  CHECK(h.counts == std::vector<std::uint64_t>{1, 2});
  CHECK(h.ignored == 1);
  CHECK(h.total() == 4);

  const auto empty = count_pixels({{}, 255}, 3);
  CHECK(empty.counts == std::vector<std::uint64_t>{0, 0, 0});
  CHECK(empty.ignored == 0);
}

TEST_CASE("count_pixels reports the offending index") {
  try {
    count_pixels({{0, 1, 2, 2}, 255}, 2);
    FAIL("expected LabelRangeError");
  } catch (const LabelRangeError& e) {
    CHECK(e.position() == 2);
    CHECK(e.value() == 2);
  }
  CHECK_THROWS_AS(count_pixels({{-1}, 255}, 2), LabelRangeError);
}

TEST_CASE("normalize") {
  ClassHistogram h(3);
  h.counts = {60, 30, 10};
  const auto f = normalize(h, 0.0);
  CHECK(f.freqs[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(f.freqs[1] == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(f.freqs[2] == doctest::Approx(0.1).epsilon(1e-15));

  h.counts = {1, 1, 1};
  for (double q : normalize(h, 0.0).freqs) CHECK(q == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  ClassHistogram h2(2);
  h2.counts = {99, 0};
  const auto s = normalize(h2, 1.0);
  CHECK(s.freqs[0] == 100.0 / 101.0);
  CHECK(s.freqs[1] == 1.0 / 101.0);

  CHECK_THROWS_AS(normalize(ClassHistogram(3), 0.0), DegenerateInputError);
  CHECK_THROWS_AS(normalize(h, -1.0), ContractError);
  // Empty histogram with smoothing is uniform.
  for (double q : normalize(ClassHistogram(4), 1.0).freqs) CHECK(q == 0.25);
}

TEST_CASE("update_from_pseudo_labels pools batches") {
  const std::vector<LabelBatch> maps{{{0, 0, 1}, 255}, {{1, 2, 2}, 255}};
  const auto f = update_from_pseudo_labels(maps, 3, 0.0);
  for (double q : f.freqs) CHECK(q == 2.0 / 6.0);

  const std::vector<LabelBatch> one{{{0, 0, 0, 1}, 255}};
  const auto g = update_from_pseudo_labels(one, 2, 0.0);
  CHECK(g.freqs == std::vector<double>{0.75, 0.25});

  const std::vector<LabelBatch> ignored{{{255, 255}, 255}};
  CHECK_THROWS_AS(update_from_pseudo_labels(ignored, 2, 0.0), DegenerateInputError);
}

TEST_CASE("balancing_coefficients") {
  const auto uniform = balancing_coefficients({{1.0 / 3, 1.0 / 3, 1.0 / 3}});
  CHECK(uniform.coeffs == std::vector<double>{1.0, 1.0, 1.0});

  const auto c = balancing_coefficients({{0.6, 0.3, 0.1}});
  CHECK(c.coeffs[0] == doctest::Approx(0.22184874961635637).epsilon(1e-12));
  CHECK(c.coeffs[1] == doctest::Approx(0.52287874528033756).epsilon(1e-12));
  CHECK(c.coeffs[2] == 1.0);
  CHECK(c.raw[2] == doctest::Approx(std::log(10.0)));

  const auto two = balancing_coefficients({{0.9, 0.1}});
  CHECK(two.coeffs[0] == doctest::Approx(0.045757490560675125).epsilon(1e-12));
  CHECK(two.coeffs[1] == 1.0);

  CHECK_THROWS_AS(balancing_coefficients({{0.5, 0.5, 0.0}}), ContractError);
  CHECK_THROWS_AS(balancing_coefficients({{1.5, -0.5}}), ContractError);
}

TEST_CASE("tail_ranking orders rarest first") {
  CHECK(tail_ranking({{0.5, 0.1, 0.4}}) == std::vector<std::size_t>{1, 2, 0});
}

TEST_CASE("property: scale invariance, anti-monotonicity, rarest pinned, additivity") {
  Rng rng(1234);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t c = 2 + rng.below(7);
    ClassHistogram h(c);
    for (auto& n : h.counts) n = 1 + rng.below(5000);
    const auto base = balancing_coefficients(normalize(h, 0.0));

    ClassHistogram scaled = h;
    const std::uint64_t s = 1 + rng.below(50);
    for (auto& n : scaled.counts) n *= s;
    const auto sc = balancing_coefficients(normalize(scaled, 0.0));
    for (std::size_t k = 0; k < c; ++k) CHECK(std::abs(sc.coeffs[k] - base.coeffs[k]) <= 1e-12);

    const auto rarest = std::min_element(h.counts.begin(), h.counts.end()) - h.counts.begin();
    CHECK(base.coeffs[static_cast<std::size_t>(rarest)] == 1.0);
    for (std::size_t a = 0; a < c; ++a) {
      CHECK(base.coeffs[a] > 0.0);
      CHECK(base.coeffs[a] <= 1.0);
      for (std::size_t b = 0; b < c; ++b) {
        if (h.counts[a] < h.counts[b]) CHECK(base.coeffs[a] > base.coeffs[b]);
      }
    }
  }

  for (int trial = 0; trial < 100; ++trial) {
    LabelBatch a{{}, 255}, b{{}, 255};
    for (int i = 0; i < 50; ++i) a.labels.push_back(rng.below(5) == 4 ? 255 : int(rng.below(4)));
    for (int i = 0; i < 70; ++i) b.labels.push_back(rng.below(5) == 4 ? 255 : int(rng.below(4)));
    LabelBatch ab = a;
    ab.labels.insert(ab.labels.end(), b.labels.begin(), b.labels.end());
    auto sum = count_pixels(a, 4);
    sum += count_pixels(b, 4);
    CHECK(count_pixels(ab, 4) == sum);
  }
}
