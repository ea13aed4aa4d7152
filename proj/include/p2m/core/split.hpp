#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "p2m/core/manifest.hpp"

namespace p2m {

struct SplitCounts {
  std::size_t train = 0;
  std::size_t eval = 0;
  std::size_t test = 0;

  friend bool operator==(const SplitCounts&, const SplitCounts&) = default;
};

/// Per-class counts: train = floor(n*train), eval = ceil(n*eval) capped by the
/// remainder, test gets the rest. Classes with fewer than 3 members go
/// entirely to train.
SplitCounts split_counts(std::size_t class_size, const SplitRatios& ratios);

/// Stratified, seeded split. Within each emotion the ids are sorted, shuffled
/// with a seed derived from (seed, emotion), and cut by split_counts. The
/// result keeps the input order; only the split field changes.
std::vector<PairedSample> split_dataset(std::vector<PairedSample> samples, const SplitRatios& ratios,
                                        std::int64_t seed);

}  // namespace p2m
