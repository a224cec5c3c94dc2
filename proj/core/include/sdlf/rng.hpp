#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace sdlf {

/// Deterministic random source. The raw stream comes from std::mt19937_64
/// (bit-exact on every platform); the distributions are implemented here
/// instead of using std:: ones, whose output is implementation-defined.
/// Identical seeds therefore give identical samples everywhere, which keeps
/// synthetic datasets and golden files stable.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Unbiased integer in [0, n). n must be >= 1.
  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x = gen_();
    while (x >= limit)
      x = gen_();
    return x % n;
  }

  /// Standard normal via Box-Muller (pairs cached).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    while (u1 <= 0.0)
      u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double two_pi = 6.283185307179586476925286766559;
    spare_ = r * std::sin(two_pi * u2);
    has_spare_ = true;
    return r * std::cos(two_pi * u2);
  }

  /// Normal truncated to +-2 sigma (resampled), mean 0.
  double trunc_normal(double sigma) {
    double z = normal();
    while (z < -2.0 || z > 2.0)
      z = normal();
    return z * sigma;
  }

  /// k distinct values from [0, n) in random order (partial Fisher-Yates).
  std::vector<std::uint64_t> sample_without_replacement(std::uint64_t n, std::uint64_t k);

private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Stable seed derivation: hashes (master, stream, index) with splitmix64 so
/// per-slice / per-epoch streams are independent of loop order and resumable.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

/// Stream tags for derive_seed.
namespace seed_stream {
inline constexpr std::uint64_t mask = 1;
inline constexpr std::uint64_t split = 2;
inline constexpr std::uint64_t val_split = 3;
inline constexpr std::uint64_t model_init = 4;
inline constexpr std::uint64_t slice_synth = 5;
} // namespace seed_stream

} // namespace sdlf
