#pragma once

#include <cstdint>
#include <random>

namespace blv {

/// Seeded 64-bit generator with portable uniform conversion. The output
/// sequence of std::mt19937_64 is fixed by the standard, and the conversions
/// below avoid the implementation-defined std distributions, so a seed
/// reproduces the same stream on every toolchain.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() {
    ++draws_;
    return engine_();
  }

  /// Uniform on the open interval (0, 1); safe to pass to log().
  double uniform_open() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  /// Uniform integer in [0, bound) by rejection; bound must be nonzero.
  std::uint64_t below(std::uint64_t bound);

  /// Number of raw 64-bit draws consumed so far.
  std::uint64_t draws() const noexcept { return draws_; }

  friend bool operator==(const Rng& a, const Rng& b) {
    return a.draws_ == b.draws_ && a.engine_ == b.engine_;
  }

 private:
  std::mt19937_64 engine_;
  std::uint64_t draws_ = 0;
};

/// Independent stream seed: splitmix64 of base and stream id.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept;

}  // namespace blv
