#include "p2m/generation/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <spdlog/spdlog.h>
#include <vector>

#include "p2m/core/error.hpp"

namespace p2m::gen {

void SamplingConfig::validate() const {
  if (top_k < 1) throw ValidationError("top_k must be >= 1");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw ValidationError("temperature must be > 0");
  if (!(max_seconds > 0.0) || !std::isfinite(max_seconds)) throw ValidationError("max_seconds must be > 0");
}

std::vector<double> topk_distribution(std::span<const double> logits, int k, double temperature) {
  if (logits.empty()) throw ValidationError("cannot sample from empty logits");
  if (k < 1) throw ValidationError("top_k must be >= 1");
  if (!(temperature > 0.0)) throw ValidationError("temperature must be > 0");
  const auto vocab = static_cast<int>(logits.size());
  if (k > vocab) {
    spdlog::warn("top_k {} exceeds vocabulary {}; clamping", k, vocab);
    k = vocab;
  }
  std::vector<double> z(logits.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!std::isfinite(logits[i])) throw ValidationError("logits must be finite");
    z[i] = logits[i] / temperature;
  }
  std::vector<int> order(z.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return z[a] > z[b]; });
  const double mx = z[order[0]];
  std::vector<double> p(z.size(), 0.0);
  double sum = 0.0;
  for (int i = 0; i < k; ++i) {
    p[order[i]] = std::exp(z[order[i]] - mx);
    sum += p[order[i]];
  }
  for (double& x : p) x /= sum;
  return p;
}

int sample_topk(std::span<const double> logits, int k, double temperature, Rng& rng) {
  const auto p = topk_distribution(logits, k, temperature);
  const double u = rng.uniform();
  double acc = 0.0;
  int last = -1;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    acc += p[i];
    last = static_cast<int>(i);
    if (u < acc) return last;
  }
  return last;
}

}  // namespace p2m::gen
