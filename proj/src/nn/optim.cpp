#include "p2m/nn/optim.hpp"

#include <cmath>
#include <numbers>

namespace p2m::nn {

void AdamW::step(ParameterStore& params, double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (const auto& name : params.names()) {
    if (params.frozen(name)) continue;
    Var& p = params.at(name);
    if (p.grad().size() == 0) continue;
    auto& [m, v] = moments_[name];
    if (m.size() == 0) {
      m = Matrix::Zero(p.rows(), p.cols());
      v = Matrix::Zero(p.rows(), p.cols());
    }
    const Matrix& g = p.grad();
    m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
    v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
    Matrix& w = p.mutable_value();
    w *= 1.0 - lr * cfg_.weight_decay;
    w.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg_.eps);
  }
}

double cosine_with_warmup(double base_lr, long step, long warmup, long total) {
  if (warmup > 0 && step <= warmup) return base_lr * static_cast<double>(step) / static_cast<double>(warmup);
  if (total <= warmup) return base_lr;
  const double progress =
      std::min(1.0, static_cast<double>(step - warmup) / static_cast<double>(total - warmup));
  return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace p2m::nn
