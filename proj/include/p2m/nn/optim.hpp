#pragma once

#include <map>
#include <string>

#include "p2m/nn/parameters.hpp"

namespace p2m::nn {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

/// Decoupled weight decay Adam. Frozen parameters and parameters without a
/// gradient are left untouched.
class AdamW {
 public:
  explicit AdamW(AdamWConfig cfg = {}) : cfg_(cfg) {}
  void step(ParameterStore& params, double lr);
  [[nodiscard]] long steps() const { return t_; }

 private:
  AdamWConfig cfg_;
  long t_ = 0;
  std::map<std::string, std::pair<Matrix, Matrix>> moments_;
};

/// Linear warmup to base_lr over `warmup` steps, then cosine decay to zero at
/// `total` steps. `step` is 1-based.
double cosine_with_warmup(double base_lr, long step, long warmup, long total);

}  // namespace p2m::nn
