#include "p2m/nn/autodiff.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace p2m::nn {

void Node::accumulate(const Matrix& delta) {
  if (!requires_grad) return;
  if (grad.size() == 0) {
    grad = delta;
  } else {
    grad += delta;
  }
}

Var::Var(Matrix value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

Var Var::make(Matrix value, std::vector<Var> parents, std::function<void(Node&)> backward) {
  Var out(std::move(value));
  bool any = false;
  for (const auto& p : parents) any = any || p.requires_grad();
  if (any) {
    out.node_->requires_grad = true;
    for (auto& p : parents) out.node_->parents.push_back(p.node_);
    out.node_->backward = std::move(backward);
  }
  return out;
}

void backward(const Var& loss, double seed) {
  if (loss.rows() != 1 || loss.cols() != 1) throw std::invalid_argument("backward() expects a 1x1 loss");
  if (!loss.requires_grad()) return;
  // Iterative post-order DFS: recurrent graphs are deep.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{loss.node().get(), 0}};
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && p->backward && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  loss.node()->accumulate(Matrix::Constant(1, 1, seed));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->grad.size() == 0) continue;
    n->backward(*n);
    // Interior gradients are no longer needed once propagated.
    if (n != loss.node().get()) n->grad.resize(0, 0);
  }
}

Var constant(Matrix value) { return Var(std::move(value), false); }

namespace {
Node& parent(Node& n, std::size_t i) { return *n.parents[i]; }
}  // namespace

Var matmul(const Var& a, const Var& b) {
  return Var::make(a.value() * b.value(), {a, b}, [](Node& n) {
    Node& x = parent(n, 0);
    Node& y = parent(n, 1);
    if (x.requires_grad) x.accumulate(n.grad * y.value.transpose());
    if (y.requires_grad) y.accumulate(x.value.transpose() * n.grad);
  });
}

Var add(const Var& a, const Var& b) {
  return Var::make(a.value() + b.value(), {a, b}, [](Node& n) {
    parent(n, 0).accumulate(n.grad);
    parent(n, 1).accumulate(n.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  return Var::make(a.value() - b.value(), {a, b}, [](Node& n) {
    parent(n, 0).accumulate(n.grad);
    parent(n, 1).accumulate(-n.grad);
  });
}

Var mul(const Var& a, const Var& b) {
  return Var::make(a.value().cwiseProduct(b.value()), {a, b}, [](Node& n) {
    Node& x = parent(n, 0);
    Node& y = parent(n, 1);
    if (x.requires_grad) x.accumulate(n.grad.cwiseProduct(y.value));
    if (y.requires_grad) y.accumulate(n.grad.cwiseProduct(x.value));
  });
}

Var add_row(const Var& a, const Var& r) {
  if (r.rows() != 1 || r.cols() != a.cols()) throw std::invalid_argument("add_row: shape mismatch");
  Matrix out = a.value().rowwise() + r.value().row(0);
  return Var::make(std::move(out), {a, r}, [](Node& n) {
    parent(n, 0).accumulate(n.grad);
    parent(n, 1).accumulate(n.grad.colwise().sum());
  });
}

Var scale(const Var& a, double s) {
  return Var::make(a.value() * s, {a}, [s](Node& n) { parent(n, 0).accumulate(n.grad * s); });
}

Var sigmoid(const Var& a) {
  Matrix y = a.value().unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
  return Var::make(std::move(y), {a}, [](Node& n) {
    parent(n, 0).accumulate((n.grad.array() * n.value.array() * (1.0 - n.value.array())).matrix());
  });
}

Var tanh(const Var& a) {
  Matrix y = a.value().array().tanh().matrix();
  return Var::make(std::move(y), {a}, [](Node& n) {
    parent(n, 0).accumulate((n.grad.array() * (1.0 - n.value.array().square())).matrix());
  });
}

Var relu(const Var& a) {
  return Var::make(a.value().cwiseMax(0.0), {a}, [](Node& n) {
    parent(n, 0).accumulate((n.grad.array() * (n.value.array() > 0.0).cast<double>()).matrix());
  });
}

Var transpose(const Var& a) {
  return Var::make(a.value().transpose(), {a}, [](Node& n) { parent(n, 0).accumulate(n.grad.transpose()); });
}

Var softmax_rows(const Var& a, bool causal) {
  const Matrix& x = a.value();
  Matrix y = Matrix::Zero(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Eigen::Index width = causal ? std::min<Eigen::Index>(i + 1, x.cols()) : x.cols();
    const double mx = x.row(i).head(width).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index j = 0; j < width; ++j) {
      y(i, j) = std::exp(x(i, j) - mx);
      sum += y(i, j);
    }
    y.row(i).head(width) /= sum;
  }
  return Var::make(std::move(y), {a}, [](Node& n) {
    const Matrix gy = n.grad.cwiseProduct(n.value);
    const Eigen::VectorXd dot = gy.rowwise().sum();
    parent(n, 0).accumulate(gy - (n.value.array().colwise() * dot.array()).matrix());
  });
}

Var row(const Var& a, Eigen::Index i) {
  const Eigen::Index rows = a.rows(), ncols = a.cols();
  return Var::make(a.value().row(i), {a}, [i, rows, ncols](Node& n) {
    Matrix g = Matrix::Zero(rows, ncols);
    g.row(i) = n.grad.row(0);
    parent(n, 0).accumulate(g);
  });
}

Var cols(const Var& a, Eigen::Index start, Eigen::Index count) {
  const Eigen::Index rows = a.rows(), ncols = a.cols();
  return Var::make(a.value().middleCols(start, count), {a}, [start, count, rows, ncols](Node& n) {
    Matrix g = Matrix::Zero(rows, ncols);
    g.middleCols(start, count) = n.grad;
    parent(n, 0).accumulate(g);
  });
}

Var hcat(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("hcat of nothing");
  Eigen::Index total = 0;
  for (const auto& p : parts) total += p.cols();
  Matrix out(parts.front().rows(), total);
  std::vector<Eigen::Index> widths;
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
    widths.push_back(p.cols());
  }
  return Var::make(std::move(out), parts, [widths](Node& n) {
    Eigen::Index at = 0;
    for (std::size_t i = 0; i < widths.size(); ++i) {
      parent(n, i).accumulate(n.grad.middleCols(at, widths[i]));
      at += widths[i];
    }
  });
}

Var vcat(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("vcat of nothing");
  Eigen::Index total = 0;
  for (const auto& p : parts) total += p.rows();
  Matrix out(total, parts.front().cols());
  std::vector<Eigen::Index> heights;
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
    heights.push_back(p.rows());
  }
  return Var::make(std::move(out), parts, [heights](Node& n) {
    Eigen::Index at = 0;
    for (std::size_t i = 0; i < heights.size(); ++i) {
      parent(n, i).accumulate(n.grad.middleRows(at, heights[i]));
      at += heights[i];
    }
  });
}

Var mean_rows(const Var& a) {
  const Eigen::Index rows = a.rows();
  return Var::make(a.value().colwise().mean(), {a}, [rows](Node& n) {
    parent(n, 0).accumulate(n.grad.replicate(rows, 1) / static_cast<double>(rows));
  });
}

Var apply_mask(const Var& a, const Matrix& mask) {
  return Var::make(a.value().cwiseProduct(mask), {a},
                   [mask](Node& n) { parent(n, 0).accumulate(n.grad.cwiseProduct(mask)); });
}

Var cross_entropy(const Var& logits, std::span<const int> targets, std::span<const double> weights) {
  const Matrix& x = logits.value();
  if (static_cast<Eigen::Index>(targets.size()) != x.rows()) {
    throw std::invalid_argument("cross_entropy: one target per row required");
  }
  if (!weights.empty() && weights.size() != targets.size()) {
    throw std::invalid_argument("cross_entropy: weight count mismatch");
  }
  Matrix probs(x.rows(), x.cols());
  std::vector<double> w(targets.size(), 1.0);
  if (!weights.empty()) w.assign(weights.begin(), weights.end());
  double total_w = 0.0, loss = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double mx = x.row(i).maxCoeff();
    const Eigen::ArrayXd e = (x.row(i).array() - mx).exp();
    const double sum = e.sum();
    probs.row(i) = (e / sum).matrix().transpose();
    const auto wi = w[static_cast<std::size_t>(i)];
    if (wi > 0.0) {
      const int t = targets[static_cast<std::size_t>(i)];
      if (t < 0 || t >= x.cols()) throw std::out_of_range("cross_entropy: target out of range");
      loss += wi * (mx + std::log(sum) - x(i, t));
      total_w += wi;
    }
  }
  if (total_w <= 0.0) throw std::invalid_argument("cross_entropy: no positions with positive weight");
  std::vector<int> tg(targets.begin(), targets.end());
  return Var::make(Matrix::Constant(1, 1, loss / total_w), {logits}, [probs, tg, w, total_w](Node& n) {
    Matrix g = probs;
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      const double wi = w[static_cast<std::size_t>(i)] / total_w;
      if (wi > 0.0) {
        g(i, tg[static_cast<std::size_t>(i)]) -= 1.0;
        g.row(i) *= wi;
      } else {
        g.row(i).setZero();
      }
    }
    parent(n, 0).accumulate(g * n.grad(0, 0));
  });
}

}  // namespace p2m::nn
