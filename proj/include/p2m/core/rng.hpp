#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace p2m {

/// splitmix64 finaliser; used to derive independent seeds.
std::uint64_t mix64(std::uint64_t x);

/// Seed for a named sub-stream of `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

/// Portable random source. std::mt19937_64 output is fully specified by the
/// standard; the conversions below are ours so results match across
/// standard libraries (std::uniform_*_distribution are not portable).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  /// Standard normal (Box-Muller, one value per call).
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace p2m
