#pragma once

#include <cstdint>
#include <span>

#include "p2m/core/rng.hpp"

namespace p2m::gen {

struct SamplingConfig {
  int top_k = 250;
  double temperature = 1.0;
  double max_seconds = 30.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Divides logits by `temperature`, keeps the k largest (ties keep the lower
/// index), and draws from their renormalised softmax. Exactly one uniform
/// is consumed per call, so k = 1 returns the argmax but still advances
/// `rng`. k larger than the vocabulary is clamped with a warning.
int sample_topk(std::span<const double> logits, int k, double temperature, Rng& rng);

/// Probabilities sample_topk draws from; zero outside the top k.
std::vector<double> topk_distribution(std::span<const double> logits, int k, double temperature);

}  // namespace p2m::gen
